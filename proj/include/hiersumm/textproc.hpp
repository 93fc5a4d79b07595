#pragma once

#include "hiersumm/textproc/encode.hpp"
#include "hiersumm/textproc/tokenize.hpp"
#include "hiersumm/textproc/vocab.hpp"
