#pragma once

// Federated multi-view subspace clustering with self-expressive local
// training, adaptive central fusion, and hypergraph spectral clustering,
// simulated deterministically in-process.

#include "fedmsgl/types.hpp"
#include "fedmsgl/rng.hpp"
#include "fedmsgl/matrix_io.hpp"
#include "fedmsgl/dataset.hpp"
#include "fedmsgl/local_node.hpp"
#include "fedmsgl/hypergraph.hpp"
#include "fedmsgl/server.hpp"
#include "fedmsgl/eval.hpp"
#include "fedmsgl/federation.hpp"
#include "fedmsgl/config.hpp"
#include "fedmsgl/experiment.hpp"
