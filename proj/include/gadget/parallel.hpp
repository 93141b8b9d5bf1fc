/*
 * Copyright 2026 The Gadget Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GADGET_PARALLEL_HPP_
#define GADGET_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace gadget {

// Worker bound shared by every parallel section. Defaults to GADGET_THREADS
// when set, otherwise the number of hardware threads.
void set_thread_count(int threads);
int thread_count();

// Runs body(i) for i in [0, n). Iterations must write to disjoint outputs;
// the first exception thrown by any worker is rethrown on the caller. Calls
// made from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace gadget

#endif  // GADGET_PARALLEL_HPP_
