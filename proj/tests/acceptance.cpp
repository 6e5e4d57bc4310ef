// Runs the full acceptance suite and prints one status line per criterion.

#include "fabernet/verify.hpp"

#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>

int main() {
    try {
        fabernet::ExperimentConfig cfg;
        cfg.out_dir = "acceptance_out";
        std::ostringstream log;
        const auto report = fabernet::verify_all(cfg, &log);
        for (const auto& r : report.results) {
            char secs[32];
            std::snprintf(secs, sizeof secs, "%.1f", r.seconds);
            std::cout << to_string(r.status) << " [" << r.id << "] " << r.name << " (" << secs << " s): " << r.summary
                      << '\n';
        }
        std::cout << "rows written to acceptance_out/verify.csv\n";
        return report.exit_code();
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance suite aborted: " << e.what() << '\n';
        return 1;
    }
}
