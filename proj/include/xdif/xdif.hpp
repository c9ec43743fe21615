/// @file xdif.hpp
/// @brief Umbrella header.
#pragma once

#include "xdif/config.hpp"
#include "xdif/entropy.hpp"
#include "xdif/galerkin.hpp"
#include "xdif/model.hpp"
#include "xdif/quadrature.hpp"
#include "xdif/regime.hpp"
#include "xdif/serialize.hpp"
#include "xdif/spectral.hpp"
#include "xdif/sweeps.hpp"
