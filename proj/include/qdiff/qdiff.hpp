#pragma once

// Everything except the TOML front end (qdiff/cli.hpp).

#include "qdiff/coeffs.hpp"
#include "qdiff/error.hpp"
#include "qdiff/expr.hpp"
#include "qdiff/io.hpp"
#include "qdiff/ivp.hpp"
#include "qdiff/krein.hpp"
#include "qdiff/linalg.hpp"
#include "qdiff/operator.hpp"
#include "qdiff/problems.hpp"
#include "qdiff/quadrature.hpp"
#include "qdiff/quasisystem.hpp"
#include "qdiff/sampler.hpp"
#include "qdiff/solver.hpp"
#include "qdiff/spectral.hpp"
