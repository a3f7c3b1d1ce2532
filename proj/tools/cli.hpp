// SPDX-License-Identifier: Apache-2.0
//
// mmcast - analog multicast beamforming simulation library
// Copyright (C) 2026 The mmcast authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MMCAST_CLI_HPP
#define MMCAST_CLI_HPP

#include <ostream>

namespace mmcast
{

// Exit codes: 0 success, 1 runtime or configuration error, 2 usage error.
int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace mmcast

#endif
