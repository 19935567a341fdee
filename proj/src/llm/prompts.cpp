#include "feedguard/llm/prompts.hpp"

#include "feedguard/common/error.hpp"

namespace feedguard::llm {

const std::string& prompt_template(std::string_view key) {
  const auto& all = detail::embedded_prompts();
  const auto it = all.find(key);
  if (it == all.end()) {
    throw Error(Errc::NotFound, "no prompt template named " + std::string(key));
  }
  return it->second;
}

}  // namespace feedguard::llm
