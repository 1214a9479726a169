/*
 * Copyright 2026 The roomtune Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include "roomtune/costs.hpp"
#include "roomtune/errors.hpp"
#include "roomtune/gp.hpp"
#include "roomtune/harness.hpp"
#include "roomtune/hyperfit.hpp"
#include "roomtune/io.hpp"
#include "roomtune/pid.hpp"
#include "roomtune/plant.hpp"
#include "roomtune/safe_bo.hpp"
#include "roomtune/trace.hpp"
#include "roomtune/weather.hpp"
#include "roomtune/zn.hpp"
