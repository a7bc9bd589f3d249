#pragma once

// Umbrella header.
#include "vlp/types.hpp"
#include "vlp/binary_io.hpp"
#include "vlp/rng.hpp"
#include "vlp/kg/graph.hpp"
#include "vlp/kg/distance.hpp"
#include "vlp/model/embedding.hpp"
#include "vlp/model/gradients.hpp"
#include "vlp/model/gsf.hpp"
#include "vlp/vertical/reference.hpp"
#include "vlp/vertical/aggregate.hpp"
#include "vlp/sampling/red.hpp"
#include "vlp/train/config.hpp"
#include "vlp/train/adam.hpp"
#include "vlp/train/checkpoint.hpp"
#include "vlp/train/loss.hpp"
#include "vlp/train/trainer.hpp"
#include "vlp/train/grid.hpp"
#include "vlp/eval/evaluator.hpp"
#include "vlp/pipeline.hpp"
