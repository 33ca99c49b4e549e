#pragma once

#include "folcomp/model.hpp"

#include <string>

namespace folcomp::test
{

inline std::string model_path(const std::string & name) { return std::string(FOLCOMP_MODEL_DIR) + "/" + name + ".json"; }

/// Loads a bundled model; the abelian controls are loaded with the bracket-generating waiver.
inline FoliatedModel load(const std::string & name)
{
  ValidationOptions opt;
  opt.require_bracket_generating = name != "abelian3";
  return validate_model(load_model_spec(model_path(name)), opt);
}

inline double max_abs(const Vec & v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace folcomp::test
