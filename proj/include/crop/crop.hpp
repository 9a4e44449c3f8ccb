// Copyright 2026 The crop Authors.
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


// Umbrella header.

#pragma once

#include "crop/align_builder.hpp"
#include "crop/backends.hpp"
#include "crop/common.hpp"
#include "crop/corpus_io.hpp"
#include "crop/eval.hpp"
#include "crop/external.hpp"
#include "crop/labeled_seq.hpp"
#include "crop/perceptron.hpp"
#include "crop/postprocess.hpp"
#include "crop/projection.hpp"
#include "crop/selftrain.hpp"
#include "crop/synthetic.hpp"
