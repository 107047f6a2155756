/*
 * Copyright 2026 The Debias Workbench Authors.
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

#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "debias/session.hpp"

namespace debias {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir;
  bool logical_clock = false;
};

// HTTP/JSON facade over Session. Each endpoint validates and serializes, then
// issues the same command document the CLI would. Sessions are persisted
// under data_dir/<session id>/ after every mutation and restored by log
// replay at construction.
class Service {
 public:
  // Errors: kStorageFailure (data_dir unusable or a session fails to restore).
  explicit Service(ServiceConfig config);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listening socket and returns the port. Errors: kBindFailure.
  int bind();
  // Serves until stop(); bind() must have succeeded.
  void listen();
  void stop();
  // Blocks until listen() is accepting connections.
  void wait_until_ready() const;

  size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace debias
