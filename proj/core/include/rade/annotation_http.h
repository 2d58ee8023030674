// Copyright 2026 The RADE Toolkit Authors.
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

// HTTP front end for AnnotationService.
//
// Requests that act on a session carry `Authorization: Bearer <annotator>`
// and the token must name the session's annotator. This is a convenience
// check only; there is no authentication backend.

#ifndef RADE_ANNOTATION_HTTP_H_
#define RADE_ANNOTATION_HTTP_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "rade/annotation.h"

namespace rade::annotation {

// HTTP status for a service error.
int HttpStatusFor(ErrorCode code);

class HttpServer {
 public:
  // `static_dir`, when set, is served under "/" for the browser client.
  explicit HttpServer(AnnotationService& service,
                      std::optional<std::filesystem::path> static_dir = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to `port` (0 picks a free one) and returns the bound port.
  int Bind(const std::string& host, int port);
  // Blocks until Stop().
  void Serve();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rade::annotation

#endif  // RADE_ANNOTATION_HTTP_H_
