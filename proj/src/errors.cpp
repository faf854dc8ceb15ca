#include "bladeenv/errors.hpp"

namespace bladeenv {

ArtifactError::ArtifactError(const std::string& stage, const std::string& what)
    : std::runtime_error(what + " (rerun stage '" + stage + "')"), stage_(stage) {}

}  // namespace bladeenv
