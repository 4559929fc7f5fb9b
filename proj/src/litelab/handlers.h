#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "litelab/srouter.h"

namespace litelab {

// ihandlers are compiled-in registrants selected by name from the job
// archive's handlers/ directory. Dynamic code loading is an extension point,
// not a requirement.
using HandlerFactory =
    std::function<std::unique_ptr<IHandler>(const nlohmann::json& params)>;

class HandlerRegistry {
 public:
  static HandlerRegistry& instance();

  void add(const std::string& name, HandlerFactory f);
  bool has(const std::string& name) const;
  std::unique_ptr<IHandler> create(const std::string& name, const nlohmann::json& params,
                                   std::string* err) const;
  std::vector<std::string> names() const;

 private:
  std::vector<std::pair<std::string, HandlerFactory>> entries_;
};

// Built-ins, registered on first HandlerRegistry::instance():
//   count      — bumps counter "ihandler.<label>.count" per packet
//   dropall    — drops everything (chain isolation testing)
//   appendbyte — appends one byte to each payload
void register_builtin_handlers(HandlerRegistry& reg);

}  // namespace litelab
