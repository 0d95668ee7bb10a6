/*
 * Copyright 2026 The meshsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file errors.hpp
 * @brief Exception hierarchy shared by every meshsim module.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace meshsim {

/// Root of all simulator errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MESHSIM_DEFINE_ERROR(Name) \
  class Name : public Error {      \
   public:                         \
    using Error::Error;            \
  };

MESHSIM_DEFINE_ERROR(BoundsError)      // coordinate outside the mesh
MESHSIM_DEFINE_ERROR(DomainError)      // argument outside an operation's domain
MESHSIM_DEFINE_ERROR(AddressError)     // range spans owners or is unmapped
MESHSIM_DEFINE_ERROR(DescriptorError)  // malformed DMA descriptor
MESHSIM_DEFINE_ERROR(BusyError)        // DMA channel already running
MESHSIM_DEFINE_ERROR(OrderingError)    // timer stop before start
MESHSIM_DEFINE_ERROR(MembershipError)  // barrier caller is not a participant
MESHSIM_DEFINE_ERROR(ProtocolError)    // mutex misuse
MESHSIM_DEFINE_ERROR(LayoutError)      // scratchpad capacity or overlap
MESHSIM_DEFINE_ERROR(ConfigError)      // invalid configuration or workgroup
MESHSIM_DEFINE_ERROR(UsageError)       // invalid experiment spec or CLI usage

#undef MESHSIM_DEFINE_ERROR

}  // namespace meshsim
