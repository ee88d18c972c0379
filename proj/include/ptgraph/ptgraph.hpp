// ptgraph - point cloud neighbor graphs, graph smoothing and local geometry

#pragma once

#include "ptgraph/aggregate.hpp"
#include "ptgraph/construct.hpp"
#include "ptgraph/core.hpp"
#include "ptgraph/fixtures.hpp"
#include "ptgraph/geometry.hpp"
#include "ptgraph/io.hpp"
#include "ptgraph/pipeline.hpp"
#include "ptgraph/smooth.hpp"
