/*
 * Copyright (C) 2026 The hiercat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HIERCAT_PARALLEL_HPP_
#define HIERCAT_PARALLEL_HPP_

#include <functional>

namespace hiercat {

// Worker count for task-level parallelism: HIERCAT_THREADS when set,
// otherwise hardware concurrency. Always >= 1.
int worker_count();

// Runs fn(0..n-1) on a transient pool of worker_count() threads. Tasks must
// write only to their own output slots; result content must not depend on
// scheduling. Exceptions are captured and rethrown on the caller thread.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace hiercat

#endif  // HIERCAT_PARALLEL_HPP_
