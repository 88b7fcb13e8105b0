#include "knnmt/fixtures.hpp"

#include <array>
#include <set>

#include "knnmt/error.hpp"

namespace knnmt::fixtures {

namespace {

// 51 X->en datastores: entry counts, families, M2M100 groupings, bridge flags.
constexpr std::array<DatastoreInfo, 51> kTable{{
        {"kk", 84e3, "Turkic", "Turkic", false},
        {"be", 116e3, "Slavic", "Slavic", false},
        {"bn", 127e3, "Indo-Aryan", "Indo", true},
        {"ms", 132e3, "Malayo-Polynesian", "Malayo", false},
        {"bs", 146e3, "Slavic", "Slavic", false},
        {"az", 153e3, "Turkic", "Turkic", false},
        {"ta", 156e3, "Dravidian", "Indo", true},
        {"ur", 158e3, "Indo-Aryan", "Indo", false},
        {"mn", 181e3, "Mongolic", "Mongolic", false},
        {"mr", 241e3, "Indo-Aryan", "Indo", false},
        {"gl", 254e3, "Romance", "Romance", false},
        {"et", 280e3, "Uralic", "Uralic", false},
        {"ka", 332e3, "Kartvelian", "Greek", false},
        {"no", 411e3, "Germanic", "Germanic", false},
        {"hi", 481e3, "Indo-Aryan", "Indo", true},
        {"sl", 520e3, "Slavic", "Slavic", false},
        {"hy", 544e3, "Armenian", "Greek", false},
        {"my", 558e3, "Sino-Tibetan", "Mongolic", false},
        {"fi", 623e3, "Uralic", "Uralic", true},
        {"mk", 683e3, "Slavic", "Slavic", false},
        {"lt", 1.1e6, "Baltic", "Uralic", true},
        {"sq", 1.2e6, "Albanian", "Greek", false},
        {"da", 1.2e6, "Germanic", "Germanic", false},
        {"pt", 1.2e6, "Romance", "Romance", true},
        {"sv", 1.4e6, "Germanic", "Germanic", true},
        {"sk", 1.6e6, "Slavic", "Slavic", false},
        {"id", 2.3e6, "Malayo-Polynesian", "Malayo", true},
        {"th", 2.6e6, "Kra-Dai", "Mongolic", false},
        {"cs", 2.7e6, "Slavic", "Slavic", false},
        {"uk", 2.9e6, "Slavic", "Slavic", false},
        {"hr", 3.3e6, "Slavic", "Slavic", false},
        {"el", 3.5e6, "Hellenic", "Greek", true},
        {"sr", 3.6e6, "Slavic", "Slavic", false},
        {"hu", 3.9e6, "Uralic", "Uralic", true},
        {"fa", 4.0e6, "Iranian", "Arabic", true},
        {"de", 4.5e6, "Germanic", "Germanic", true},
        {"vi", 4.6e6, "Vietic", "Chinese", true},
        {"bg", 4.7e6, "Slavic", "Slavic", false},
        {"pl", 4.7e6, "Slavic", "Slavic", true},
        {"ro", 4.8e6, "Romance", "Romance", false},
        {"nl", 4.9e6, "Germanic", "Germanic", true},
        {"tr", 4.9e6, "Turkic", "Turkic", true},
        {"fr", 5.1e6, "Romance", "Romance", true},
        {"es", 5.2e6, "Romance", "Romance", true},
        {"zh", 5.4e6, "Chinese", "Chinese", true},
        {"ja", 5.5e6, "Japonic", "Chinese", true},
        {"it", 5.5e6, "Romance", "Romance", false},
        {"ko", 5.5e6, "Koreanic", "Chinese", true},
        {"ru", 5.6e6, "Slavic", "Slavic", true},
        {"he", 5.7e6, "Semitic", "Arabic", true},
        {"ar", 5.8e6, "Arabic", "Arabic", true},
}};

} // namespace

std::span<const DatastoreInfo> appendix_table() {
    return {kTable.data(), kTable.size()};
}

double total_entries() {
    double total = 0.0;
    for (const DatastoreInfo& row : kTable) total += row.entries;
    return total;
}

double grouping_entries(const std::string& grouping) {
    double total = 0.0;
    for (const DatastoreInfo& row : kTable) {
        if (grouping == row.grouping) total += row.entries;
    }
    return total;
}

double bridge_entries() {
    double total = 0.0;
    for (const DatastoreInfo& row : kTable) {
        if (row.bridge) total += row.entries;
    }
    return total;
}

std::vector<std::string> groupings() {
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (const DatastoreInfo& row : kTable) {
        if (seen.insert(row.grouping).second) out.push_back(row.grouping);
    }
    return out;
}

double p_uni(const std::string& lang) {
    for (const DatastoreInfo& row : kTable) {
        if (lang == row.lang) return row.entries / total_entries();
    }
    raise(ErrorCode::invalid_argument, "language not in fixture table: " + lang);
}

} // namespace knnmt::fixtures
