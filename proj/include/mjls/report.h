#pragma once

#include <string>

#include <json.hpp>

#include "mjls/commands.h"

namespace mjls {

/// Versioned machine-readable report. Mode indices are 1-based.
nlohmann::ordered_json ReportToJson(const Report& report);

/// Long-format CSV: quantity,mode,time,row,col,value.
std::string ReportToCsv(const Report& report);

std::string ReportToText(const Report& report);

std::string VisitedToText(const VisitedListing& listing);

std::string ReproductionToText(const ReproductionTable& table);

}  // namespace mjls
