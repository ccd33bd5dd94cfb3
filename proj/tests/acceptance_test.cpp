// Acceptance suite runner. `--criterion ID` runs one criterion; no argument
// runs all of them. Exit status 0 iff every selected criterion passes.

#include <cstring>
#include <iostream>
#include <string>

#include "gwpen/acceptance.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> ids;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            ids.emplace_back(argv[++i]);
        } else {
            std::cerr << "usage: acceptance_test [--criterion ID]...\n";
            return 2;
        }
    }
    if (ids.empty())
        for (const auto& [id, fn] : gwpen::acceptance::registry()) ids.push_back(id);

    bool all = true;
    for (const auto& id : ids) {
        try {
            const auto r = gwpen::acceptance::run(id);
            gwpen::acceptance::print(std::cout, r);
            all = all && r.passed();
        } catch (const std::exception& e) {
            std::cout << "FAIL criterion " << id << ": " << e.what() << '\n';
            all = false;
        }
        std::cout.flush();
    }
    return all ? 0 : 1;
}
