#pragma once

#include "hiersumm/train_eval/checkpoint.hpp"
#include "hiersumm/train_eval/evaluate.hpp"
#include "hiersumm/train_eval/gradcheck.hpp"
#include "hiersumm/train_eval/loss.hpp"
#include "hiersumm/train_eval/rouge.hpp"
#include "hiersumm/train_eval/trainer.hpp"
