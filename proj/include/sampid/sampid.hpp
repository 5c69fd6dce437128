// Copyright 2026 The sampid Authors
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

#ifndef SAMPID_SAMPID_HPP_
#define SAMPID_SAMPID_HPP_

#include "sampid/actuator.hpp"
#include "sampid/bezier.hpp"
#include "sampid/cmaes.hpp"
#include "sampid/controller.hpp"
#include "sampid/cost.hpp"
#include "sampid/dataset.hpp"
#include "sampid/dynamics.hpp"
#include "sampid/errors.hpp"
#include "sampid/excitation.hpp"
#include "sampid/inertia.hpp"
#include "sampid/parallel.hpp"
#include "sampid/params.hpp"
#include "sampid/pipeline.hpp"
#include "sampid/state.hpp"
#include "sampid/svg.hpp"

#endif  // SAMPID_SAMPID_HPP_
