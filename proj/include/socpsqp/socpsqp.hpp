// Copyright 2026 The socpsqp Authors
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

#ifndef SOCPSQP_SOCPSQP_HPP_
#define SOCPSQP_SOCPSQP_HPP_

#include "socpsqp/cbf.hpp"
#include "socpsqp/cuts.hpp"
#include "socpsqp/driver.hpp"
#include "socpsqp/genbench.hpp"
#include "socpsqp/json_io.hpp"
#include "socpsqp/merit.hpp"
#include "socpsqp/model.hpp"
#include "socpsqp/qp_core.hpp"
#include "socpsqp/soc_geometry.hpp"
#include "socpsqp/subproblems.hpp"
#include "socpsqp/types.hpp"

#endif  // SOCPSQP_SOCPSQP_HPP_
