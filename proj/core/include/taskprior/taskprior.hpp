#pragma once

#include "taskprior/errors.hpp"
#include "taskprior/eval.hpp"
#include "taskprior/feature_matrix.hpp"
#include "taskprior/io.hpp"
#include "taskprior/kernel.hpp"
#include "taskprior/parallel.hpp"
#include "taskprior/prior.hpp"
#include "taskprior/probe.hpp"
#include "taskprior/rng.hpp"
#include "taskprior/sampler.hpp"
