// Copyright 2026 The lesionseg Authors
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

#include "lesionseg/augment.hpp"
#include "lesionseg/detection.hpp"
#include "lesionseg/error.hpp"
#include "lesionseg/eval.hpp"
#include "lesionseg/external_backend.hpp"
#include "lesionseg/image.hpp"
#include "lesionseg/ingest.hpp"
#include "lesionseg/mask.hpp"
#include "lesionseg/metadata.hpp"
#include "lesionseg/pipeline.hpp"
#include "lesionseg/png_io.hpp"
#include "lesionseg/polygon.hpp"
#include "lesionseg/render.hpp"
#include "lesionseg/rng.hpp"
#include "lesionseg/segmenter.hpp"
#include "lesionseg/subprocess.hpp"
