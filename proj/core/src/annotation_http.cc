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

#include "rade/annotation_http.h"

#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rade/log.h"

namespace rade::annotation {
namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void SendError(httplib::Response& res, ErrorCode code, const std::string& message) {
  SendJson(res, HttpStatusFor(code),
           {{"error", {{"code", std::string(ErrorCodeName(code))},
                       {"message", message}}}});
}

std::string BearerToken(const httplib::Request& req) {
  const std::string header = req.get_header_value("Authorization");
  constexpr std::string_view kPrefix = "Bearer ";
  if (header.rfind(kPrefix, 0) != 0) return "";
  return header.substr(kPrefix.size());
}

void RequireAnnotator(const httplib::Request& req, const std::string& annotator) {
  if (BearerToken(req) != annotator) {
    throw Error(ErrorCode::kUnauthorized,
                "bearer token does not match the session's annotator");
  }
}

json ParseBody(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::kMalformedRecord, "request body must be a JSON object");
  }
  return body;
}

// Runs a handler, mapping service errors to JSON error responses.
template <typename F>
httplib::Server::Handler Guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      SendError(res, e.code(), e.what());
    } catch (const json::exception& e) {
      SendError(res, ErrorCode::kMalformedRecord, e.what());
    }
  };
}

}  // namespace

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnauthorized: return 401;
    case ErrorCode::kUnknownSession:
    case ErrorCode::kUnknownDataset: return 404;
    case ErrorCode::kStaleItem:
    case ErrorCode::kSessionClosed:
    case ErrorCode::kExhausted:
    case ErrorCode::kNoRemainingItems:
    case ErrorCode::kDuplicateId:
    case ErrorCode::kInsufficientOverlap: return 409;
    case ErrorCode::kOrderingViolation: return 422;
    case ErrorCode::kIo: return 500;
    default: return 400;
  }
}

struct HttpServer::Impl {
  explicit Impl(AnnotationService& s) : service(s) {}
  AnnotationService& service;
  httplib::Server server;
};

HttpServer::HttpServer(AnnotationService& service,
                       std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(service)) {
  AnnotationService& svc = impl_->service;
  httplib::Server& server = impl_->server;

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    SendJson(res, 200, {{"status", "ok"}});
  });

  server.Post("/sessions", Guarded([&svc](const httplib::Request& req,
                                           httplib::Response& res) {
    const json body = ParseBody(req);
    const std::string annotator = body.at("annotator_id").get<std::string>();
    RequireAnnotator(req, annotator);
    const AnnotationSession session =
        svc.CreateSession(annotator, body.at("dataset_id").get<std::string>(),
                          body.value("seed", std::uint64_t{0}));
    SendJson(res, 201, session.ToJson());
  }));

  server.Get(R"(/sessions/([^/]+)/next)", Guarded([&svc](const httplib::Request& req,
                                                          httplib::Response& res) {
    const std::string id = req.matches[1];
    RequireAnnotator(req, svc.GetSession(id).annotator_id);
    SendJson(res, 200, svc.NextItem(id).ToJson());
  }));

  server.Post(R"(/sessions/([^/]+)/ratings)", Guarded([&svc](const httplib::Request& req,
                                                              httplib::Response& res) {
    const std::string id = req.matches[1];
    RequireAnnotator(req, svc.GetSession(id).annotator_id);
    const SubmissionResult result =
        svc.SubmitRating(RatingSubmission::FromJson(id, ParseBody(req)));
    json body = result.ToJson();
    if (result.accepted) {
      body["session"] = svc.GetSession(id).ToJson();
      SendJson(res, 200, body);
    } else {
      const ErrorCode code = result.code.value_or(ErrorCode::kMalformedRecord);
      body["error"] = {{"code", std::string(ErrorCodeName(code))},
                       {"message", result.violations.empty()
                                       ? std::string("rating rejected")
                                       : result.violations.front().rule}};
      SendJson(res, 422, body);
    }
  }));

  server.Post(R"(/sessions/([^/]+)/abandon)", Guarded([&svc](const httplib::Request& req,
                                                              httplib::Response& res) {
    const std::string id = req.matches[1];
    RequireAnnotator(req, svc.GetSession(id).annotator_id);
    SendJson(res, 200, svc.AbandonSession(id).ToJson());
  }));

  server.Get(R"(/datasets/([^/]+)/agreement)", Guarded([&svc](const httplib::Request& req,
                                                               httplib::Response& res) {
    const stats::AgreementReport r = svc.AgreementReport(req.matches[1]);
    SendJson(res, 200, {{"kappa", r.kappa},
                        {"n_items", r.n_items},
                        {"n_raters", r.n_raters},
                        {"n_categories", r.n_categories}});
  }));

  server.Get(R"(/datasets/([^/]+)/export)", Guarded([&svc](const httplib::Request& req,
                                                            httplib::Response& res) {
    const Dataset d = svc.ExportAnnotations(req.matches[1]);
    std::string text;
    for (const auto& ex : d.examples) text += ExampleToJson(ex).dump() + "\n";
    res.status = 200;
    res.set_content(text, "application/x-ndjson");
  }));

  if (static_dir) {
    if (!server.set_mount_point("/", static_dir->string())) {
      throw Error(ErrorCode::kMissingFile,
                  "static directory " + static_dir->string() + " not found");
    }
  }
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind to " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::kIo,
                "cannot bind to " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::Serve() {
  LogInfo("annotation service listening");
  impl_->server.listen_after_bind();
}

void HttpServer::Stop() { impl_->server.stop(); }

}  // namespace rade::annotation
