#pragma once

#include "planckwave/error.hpp"
#include "planckwave/params.hpp"
#include "planckwave/cutoff.hpp"
#include "planckwave/quadrature.hpp"
#include "planckwave/parallel.hpp"
#include "planckwave/lattice.hpp"
#include "planckwave/coefficients.hpp"
#include "planckwave/field.hpp"
#include "planckwave/xray.hpp"
#include "planckwave/phasespace.hpp"
#include "planckwave/stats.hpp"
#include "planckwave/concentration.hpp"
#include "planckwave/ensemble.hpp"
#include "planckwave/io.hpp"
#include "planckwave/config.hpp"
#include "planckwave/report.hpp"
