#pragma once

#include <json.hpp>
#include <string>

#include "incidence/cmdfit.hpp"
#include "incidence/economy.hpp"
#include "incidence/elasticities.hpp"
#include "incidence/panel.hpp"
#include "incidence/regress.hpp"

namespace incidence {

using json = nlohmann::json;

// Writes via a temp file and rename so readers never observe partial output.
void write_text_atomic(const std::string& path, const std::string& content);

json to_json(const EconomyParams& p);
EconomyParams economy_params_from_json(const json& j);  // unknown keys rejected

json to_json(const FirmEquilibrium& eq);
json to_json(const IndustryEquilibrium& ind);
std::string firm_equilibrium_csv(const FirmEquilibrium& eq);

json to_json(const PayrollComponents& c);
json to_json(const ElasticityReport& rep);
std::string elasticity_report_csv_header();
std::string elasticity_report_csv_row(const ElasticityReport& rep);

json to_json(const ReformEffect& re);
json to_json(const CmdResult& res);
json to_json(const DgpTruth& truth);

json to_json(const Coef& c);
json to_json(const EstimateReport& rep);

std::string sweep_csv(const SweepResult& sw);
std::string sweep_svg(const SweepResult& sw, const std::string& title = "sigma_KL sensitivity");

std::string event_study_csv(const EstimateReport& rep);
std::string event_study_svg(const EstimateReport& rep,
                            const std::string& title = "event study");

}  // namespace incidence
