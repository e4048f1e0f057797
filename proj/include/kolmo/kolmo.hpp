#pragma once

#include <kolmo/bounds.hpp>
#include <kolmo/coefficients.hpp>
#include <kolmo/config.hpp>
#include <kolmo/control.hpp>
#include <kolmo/errors.hpp>
#include <kolmo/fd.hpp>
#include <kolmo/geometry.hpp>
#include <kolmo/grid.hpp>
#include <kolmo/kernels.hpp>
#include <kolmo/mc.hpp>
#include <kolmo/payoff.hpp>
#include <kolmo/pricing.hpp>
#include <kolmo/quadrature.hpp>
