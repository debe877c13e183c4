// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.
#pragma once

#include "dmft/errors.hpp"
#include "dmft/activation_spec.hpp"
#include "dmft/gauss_kernel.hpp"
#include "dmft/activations.hpp"
#include "dmft/hermite.hpp"
#include "dmft/mft.hpp"
#include "dmft/landau.hpp"
#include "dmft/criticality_lab.hpp"
#include "dmft/scheduler.hpp"
#include "dmft/finite_width.hpp"
#include "dmft/io.hpp"
#include "dmft/acceptance.hpp"
