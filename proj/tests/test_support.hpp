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

#ifndef HIERCAT_TESTS_TEST_SUPPORT_HPP_
#define HIERCAT_TESTS_TEST_SUPPORT_HPP_

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hiercat/hierarchy.hpp"

namespace hiercat::test {

// The two-level example structure used throughout: three classes at the
// top level, nine below, children {1,2,3} / {4,5,6} / {7,8,9}.
inline Hierarchy two_level_hierarchy() {
  std::vector<std::vector<std::string>> rows;
  const char* parents[3] = {"p1", "p2", "p3"};
  for (int s = 1; s <= 9; ++s)
    rows.push_back({parents[(s - 1) / 3], "c" + std::to_string(s)});
  return Hierarchy::from_rows(rows);
}

inline std::string temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hiercat_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace hiercat::test

#endif  // HIERCAT_TESTS_TEST_SUPPORT_HPP_
