#ifndef SPARSEDGE_SPARSEDGE_HPP
#define SPARSEDGE_SPARSEDGE_HPP

#include "sparsedge/checkpoint.hpp"
#include "sparsedge/config.hpp"
#include "sparsedge/engine.hpp"
#include "sparsedge/errors.hpp"
#include "sparsedge/fixedpoint.hpp"
#include "sparsedge/interleaver.hpp"
#include "sparsedge/memory_bank.hpp"
#include "sparsedge/mnist.hpp"
#include "sparsedge/perfmodel.hpp"
#include "sparsedge/rng.hpp"
#include "sparsedge/topology.hpp"
#include "sparsedge/training.hpp"

#endif  // SPARSEDGE_SPARSEDGE_HPP
