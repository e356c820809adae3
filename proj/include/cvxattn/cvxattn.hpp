#pragma once

#include "cvxattn/dataio.hpp"
#include "cvxattn/features.hpp"
#include "cvxattn/losses.hpp"
#include "cvxattn/model.hpp"
#include "cvxattn/numkernel.hpp"
#include "cvxattn/projections.hpp"
#include "cvxattn/trainer.hpp"
#include "cvxattn/verify.hpp"
