// Copyright 2026 The steerq Authors
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

#pragma once

#include <string>
#include <string_view>

namespace steerq {

/// Lowercase hex SHA-1.
std::string sha1_hex(std::string_view data);

/// Digest git assigns to a blob with this content.
std::string git_blob_digest(std::string_view content);

}  // namespace steerq
