#pragma once

#include <span>
#include <string>
#include <vector>

namespace knnmt::fixtures {

// Published per-language datastore statistics for the 51 TED directions
// into English: entry count, language family, M2M100 grouping, bridge flag.
struct DatastoreInfo {
    const char* lang;
    double entries; // reported |D|, already rounded by the source
    const char* family;
    const char* grouping;
    bool bridge;
};

std::span<const DatastoreInfo> appendix_table();

double total_entries();
double grouping_entries(const std::string& grouping);
double bridge_entries();
std::vector<std::string> groupings();

// |D_lang| / total, as a fraction
double p_uni(const std::string& lang);

} // namespace knnmt::fixtures
