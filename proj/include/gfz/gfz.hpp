// Copyright 2026 gfz project authors. All rights reserved.
// Use of this source code is governed by Apache 2 LICENSE that can be found in the LICENSE file.

// Umbrella header.

#pragma once

#include "gfz/common.hpp"
#include "gfz/config.hpp"
#include "gfz/distance.hpp"
#include "gfz/engine.hpp"
#include "gfz/graph.hpp"
#include "gfz/inference.hpp"
#include "gfz/report.hpp"
#include "gfz/scenario.hpp"
#include "gfz/schedule.hpp"
#include "gfz/stats.hpp"
