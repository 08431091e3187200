#pragma once

#include "lbrc/dataset.hpp"
#include "lbrc/empirical.hpp"
#include "lbrc/error.hpp"
#include "lbrc/estimators.hpp"
#include "lbrc/influence.hpp"
#include "lbrc/io.hpp"
#include "lbrc/quadrature.hpp"
#include "lbrc/simulation.hpp"
#include "lbrc/step_function.hpp"
#include "lbrc/truth.hpp"
