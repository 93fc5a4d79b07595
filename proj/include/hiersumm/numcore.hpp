#pragma once

#include "hiersumm/numcore/adam.hpp"
#include "hiersumm/numcore/checkpoint.hpp"
#include "hiersumm/numcore/gradcheck.hpp"
#include "hiersumm/numcore/graph.hpp"
#include "hiersumm/numcore/layers.hpp"
#include "hiersumm/numcore/ops.hpp"
#include "hiersumm/numcore/params.hpp"
#include "hiersumm/numcore/tensor.hpp"
