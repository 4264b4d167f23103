#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <spdlog/spdlog.h>

#include <cstdlib>

int main(int argc, char** argv) {
  spdlog::set_level(std::getenv("TASKDIALOG_TEST_LOG") ? spdlog::level::debug : spdlog::level::off);
  doctest::Context ctx(argc, argv);
  return ctx.run();
}
