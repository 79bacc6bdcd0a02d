// Copyright 2026 The mia Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "mia/attacks.hpp"
#include "mia/config.hpp"
#include "mia/core.hpp"
#include "mia/error.hpp"
#include "mia/eval.hpp"
#include "mia/experiment.hpp"
#include "mia/io.hpp"
#include "mia/models.hpp"
#include "mia/rng.hpp"
#include "mia/shadow.hpp"
