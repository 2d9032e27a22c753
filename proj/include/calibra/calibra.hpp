#pragma once

// Calibration-aware Bayesian neural network training: tape autodiff, MLP
// classifiers, mean-field variational inference, the WMMCE calibration
// regularizer and ECE evaluation machinery, training loops and the
// experiment drivers.

#include "calibra/autodiff.hpp"
#include "calibra/calibration.hpp"
#include "calibra/checkpoint.hpp"
#include "calibra/config.hpp"
#include "calibra/dataset.hpp"
#include "calibra/experiment.hpp"
#include "calibra/mlp.hpp"
#include "calibra/optim.hpp"
#include "calibra/rng.hpp"
#include "calibra/tables.hpp"
#include "calibra/tensor.hpp"
#include "calibra/training.hpp"
#include "calibra/variational.hpp"
