#pragma once

// Umbrella header: particle-method solver and verification harness for a 2-d
// mean-field kinetic equation with finite-range non-Lipschitz interaction.

#include "kinflow/bump.hpp"
#include "kinflow/config.hpp"
#include "kinflow/cutoff_force.hpp"
#include "kinflow/diagnostics.hpp"
#include "kinflow/drive.hpp"
#include "kinflow/ensemble.hpp"
#include "kinflow/flow.hpp"
#include "kinflow/force_model.hpp"
#include "kinflow/harness.hpp"
#include "kinflow/initial_density.hpp"
#include "kinflow/neighbor_grid.hpp"
#include "kinflow/pairwise_sum.hpp"
#include "kinflow/parallel.hpp"
#include "kinflow/phase_density.hpp"
#include "kinflow/quadrature.hpp"
#include "kinflow/rng.hpp"
#include "kinflow/stability.hpp"
#include "kinflow/transport.hpp"
#include "kinflow/vec2.hpp"
