// ----------------------------------------------------------------------------
// Copyright 2026 The vgf authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#ifndef VGF_VGF_HPP
#define VGF_VGF_HPP

#include "vgf/adadelta.hpp"
#include "vgf/checkpoint.hpp"
#include "vgf/config.hpp"
#include "vgf/data.hpp"
#include "vgf/energy.hpp"
#include "vgf/errors.hpp"
#include "vgf/generator.hpp"
#include "vgf/gradcheck.hpp"
#include "vgf/graph.hpp"
#include "vgf/image.hpp"
#include "vgf/rng.hpp"
#include "vgf/semisup.hpp"
#include "vgf/tensor.hpp"
#include "vgf/toyeval.hpp"
#include "vgf/training.hpp"

#endif  // VGF_VGF_HPP
