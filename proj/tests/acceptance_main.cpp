#include <iostream>

#include "rhb/bench.hpp"

int main() {
    auto criteria = rhb::bench::run_acceptance(std::cout);
    int failed = 0;
    for (const auto& c : criteria)
        if (!c.pass) ++failed;
    if (failed) {
        std::cout << failed << " acceptance criteria failed\n";
        return 1;
    }
    std::cout << "all " << criteria.size() << " acceptance criteria passed\n";
    return 0;
}
