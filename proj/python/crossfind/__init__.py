# Copyright (C) 2026 The crossfind Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
# with the License. You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software distributed under the License
# is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
# or implied. See the License for the specific language governing permissions and limitations under the License.
"""Python bindings for crossfind."""

from ._core import (
    API_VERSION,
    IMAGE_DIM,
    MAX_RESULTS,
    SHARED_DIM,
    TEXT_DIM,
    CrossfindError,
    InvalidArgumentError,
    MetricsReport,
    NotFoundError,
    Pipeline,
    PrerequisiteError,
    ProjectionHeads,
    SearchIndex,
    SearchService,
    contrastive_loss_from_similarity,
    loss_and_gradients,
    lr_at_step,
    mock_embedding,
    reciprocal_rank,
    summarize_ranks,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
