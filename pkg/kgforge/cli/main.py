# The MIT License (MIT)
# Copyright © 2024 KGForge Contributors

# Permission is hereby granted, free of charge, to any person obtaining a copy of this software and associated
# documentation files (the “Software”), to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of the Software,
# and to permit persons to whom the Software is furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all copies or substantial portions of
# the Software.

# THE SOFTWARE IS PROVIDED “AS IS”, WITHOUT WARRANTY OF ANY KIND, EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO
# THE WARRANTIES OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION
# OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.

import sys
import bittensor as bt
from loguru import logger
from traceback import print_exception
from typing import List, Optional
from kgforge.cli.commands import COMMAND_TABLE
from kgforge.cli.config import COMMANDS, build_config, check_config
from kgforge.errors import ContractViolation, KgForgeError
from kgforge.event import EventLogger
from kgforge.utils import init_wandb

USAGE = (
    "usage: kgforge {" + ",".join(COMMANDS) + "} [--config PATH] [--seed N] [--neg-ratio N] "
    "[--fusion none|attention|redaf] [--gcl none|dgi|dgi-bilinear|ggd-paper|grace] "
    "[--freeze-features] [--dim N] [--out DIR] ..."
)


def run(argv: Optional[List[str]] = None) -> int:
    """Runs one command and returns the process exit status.

    0 success, 2 configuration or usage error, 3 data error, 4 numeric fault or broken contract.
    A ContractViolation is an internal defect reached with a valid configuration, so it
    shares the internal-failure status 4 with numeric faults; status 2 is reserved for
    input the operator can correct.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        print(USAGE)
        return 0 if argv else 2
    command = argv.pop(0)
    if command not in COMMAND_TABLE:
        print(f"kgforge: unknown command {command!r}\n{USAGE}", file=sys.stderr)
        return 2

    sink, wandb_run = None, None
    try:
        config = build_config(command, argv)
        sink = check_config(config, command)
        bt.logging(config=config, logging_dir=config.out)
        bt.logging.info(f"kgforge {command}: seed {config.seed}, output {config.out}")
        wandb_run = init_wandb(config, command)
        events = EventLogger(save_events=sink is not None, wandb_run=wandb_run)
        COMMAND_TABLE[command](config, events)
        return 0
    except SystemExit as e:
        # argparse usage errors and --help
        return e.code if isinstance(e.code, int) else 2
    except (KgForgeError, ContractViolation) as err:
        key = getattr(err, "key", None)
        bt.logging.error(f"{type(err).__name__}: {err}" + (f" (key: {key})" if key else ""))
        bt.logging.debug(print_exception(type(err), err, err.__traceback__))
        return err.exit_code
    except KeyboardInterrupt:
        bt.logging.warning(f"kgforge {command} interrupted")
        return 130
    finally:
        if wandb_run is not None:
            wandb_run.finish()
        if sink is not None:
            logger.remove(sink)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
