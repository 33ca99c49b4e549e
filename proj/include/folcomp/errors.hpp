#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace folcomp
{

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Malformed model input (index sets, metric, grading, file syntax).
class SpecError : public Error
{
public:
  using Error::Error;
};

/// A mandatory certificate failed. The witness holds 1-based basis indices
/// (0 where a slot is unused).
class ValidationFailure : public Error
{
public:
  ValidationFailure(std::string certificate, std::array<int, 3> witness, const std::string & detail);

  const std::string & certificate() const { return certificate_; }
  const std::array<int, 3> & witness() const { return witness_; }

private:
  std::string certificate_;
  std::array<int, 3> witness_;
};

class NonPositiveEpsilon : public Error
{
public:
  using Error::Error;
};

class NotTotallyGeodesic : public Error
{
public:
  using Error::Error;
};

class UnsupportedGroup : public Error
{
public:
  using Error::Error;
};

class IntegrationFailure : public Error
{
public:
  using Error::Error;
};

class NoConvergence : public Error
{
public:
  using Error::Error;
};

class NonHorizontalInput : public Error
{
public:
  using Error::Error;
};

class NonHorizontalField : public Error
{
public:
  using Error::Error;
};

class DomainError : public Error
{
public:
  using Error::Error;
};

class UncertifiedDistance : public Error
{
public:
  using Error::Error;
};

/// An audit whose hypothesis on the lower bound K does not hold for the model.
class InapplicableK : public Error
{
public:
  using Error::Error;
};

/// Bonnet-Myers needs K > 0.
class NonPositiveK : public InapplicableK
{
public:
  using InapplicableK::InapplicableK;
};

}  // namespace folcomp
