#include "cli.hpp"

#include <iostream>

#include "common.hpp"
#include "scopekit/error.hpp"

namespace scopekit::cli {

namespace {

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kIo:
    case ErrorCode::kParse:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kBadKernel:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kChannelChainBroken:
    case ErrorCode::kNonUniformSampling:
    case ErrorCode::kBadSize:
    case ErrorCode::kBadRatio:
    case ErrorCode::kNonUnitLight:
      return true;
    default:
      return false;
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Endoscopy evaluation and reconstruction toolkit", "scopekit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "scopekit 0.1.0");

  Action action;
  register_eval_traj(app, action);
  register_sync(app, action);
  register_augment(app, action);
  register_loss(app, action);
  register_align(app, action);
  register_stitch(app, action);
  register_sfs(app, action);
  register_icp(app, action);
  register_report(app, action);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "scopekit: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitValidation;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    Context ctx{out};
    action(ctx);
  } catch (const Error& e) {
    err << "scopekit " << name << ": " << e.what() << '\n';
    return is_validation_error(e.code()) ? kExitValidation : kExitComputation;
  } catch (const std::bad_alloc&) {
    err << "scopekit " << name << ": out of memory\n";
    return kExitComputation;
  } catch (const std::exception& e) {
    err << "scopekit " << name << ": " << e.what() << '\n';
    return kExitComputation;
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace scopekit::cli
