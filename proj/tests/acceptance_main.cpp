// Acceptance suite entry point: one pass/fail line per criterion,
// nonzero exit on any failure. The CLI `verify` subcommand runs the same
// criteria.

#include <iostream>

#include "nonfick/acceptance.hpp"

int main() {
    return nonfick::run_acceptance(std::cout) ? 0 : 1;
}
