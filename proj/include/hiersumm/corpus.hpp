#pragma once

#include "hiersumm/corpus/density.hpp"
#include "hiersumm/corpus/interleave.hpp"
#include "hiersumm/corpus/jsonl.hpp"
#include "hiersumm/corpus/synthesize.hpp"
#include "hiersumm/corpus/toy_docs.hpp"
#include "hiersumm/corpus/types.hpp"
#include "hiersumm/corpus/window.hpp"
