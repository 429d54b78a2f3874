// Copyright 2026 The pauc-embed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.
#pragma once

#include "pauc/backend.hpp"
#include "pauc/dataset.hpp"
#include "pauc/error.hpp"
#include "pauc/io.hpp"
#include "pauc/loss.hpp"
#include "pauc/metrics.hpp"
#include "pauc/mlp.hpp"
#include "pauc/random.hpp"
#include "pauc/synth.hpp"
#include "pauc/trainer.hpp"
#include "pauc/trials.hpp"
