// Copyright 2026 The memaudit Authors
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


#ifndef MEMAUDIT_PARALLEL_HPP
#define MEMAUDIT_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace memaudit {

// Runs body(0..count-1) on up to `workers` threads. Work items are claimed in
// index order; the first exception (by item index) is rethrown after all
// threads join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

}  // namespace memaudit

#endif  // MEMAUDIT_PARALLEL_HPP
