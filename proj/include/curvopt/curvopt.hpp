#ifndef CURVOPT_CURVOPT_HPP
#define CURVOPT_CURVOPT_HPP

#include "curvopt/assembly.hpp"
#include "curvopt/fields.hpp"
#include "curvopt/mesh.hpp"
#include "curvopt/optimize.hpp"
#include "curvopt/p1.hpp"
#include "curvopt/quadrature.hpp"
#include "curvopt/solver.hpp"
#include "curvopt/sparse.hpp"
#include "curvopt/verify.hpp"
#include "curvopt/vtk.hpp"

#endif  // CURVOPT_CURVOPT_HPP
