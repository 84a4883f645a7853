#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "thetapow/metric.hpp"

namespace thetapow::cli {

constexpr int kSchemaVersion = 1;

enum Exit { kOk = 0, kFail = 1, kUndecided = 2, kUsage = 3 };

// args exclude the program name
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

nlohmann::json interval_json(const CertReal& x, int digits = 30);
nlohmann::json theta_to_json(const ThetaSeq& t);
// Accepts the bare sequence object or a full make-theta document.
ThetaSeq theta_from_json(const nlohmann::json& j, prec_t prec = 512);

} // namespace thetapow::cli
