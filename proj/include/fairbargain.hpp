// Copyright 2026 The fairbargain Authors
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

#ifndef FAIRBARGAIN_HPP
#define FAIRBARGAIN_HPP

#include "fairbargain/core.hpp"
#include "fairbargain/discrete.hpp"
#include "fairbargain/empirical_study.hpp"
#include "fairbargain/geometry.hpp"
#include "fairbargain/io.hpp"
#include "fairbargain/linalg.hpp"
#include "fairbargain/oracle.hpp"
#include "fairbargain/risk_models.hpp"
#include "fairbargain/solvers.hpp"

#endif  // FAIRBARGAIN_HPP
