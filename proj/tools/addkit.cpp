#include <addkit/cli.hpp>

int main(int argc, char** argv) { return addkit::cli::run(argc, argv); }
