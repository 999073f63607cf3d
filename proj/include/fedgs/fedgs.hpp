// Copyright 2026 The fedgs-sim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "fedgs/config.hpp"
#include "fedgs/difficulty.hpp"
#include "fedgs/errors.hpp"
#include "fedgs/fl.hpp"
#include "fedgs/harness.hpp"
#include "fedgs/mask.hpp"
#include "fedgs/metrics.hpp"
#include "fedgs/morphology.hpp"
#include "fedgs/optimizer.hpp"
#include "fedgs/rng.hpp"
#include "fedgs/segnet.hpp"
#include "fedgs/synth.hpp"
