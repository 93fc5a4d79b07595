#pragma once

#include "hiersumm/model/config.hpp"
#include "hiersumm/model/model.hpp"
#include "hiersumm/model/trace_json.hpp"
