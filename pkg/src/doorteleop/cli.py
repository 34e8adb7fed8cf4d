"""Command-line entry points."""

from __future__ import annotations

import argparse
import json
import sys

from . import service as service_mod
from .base_motion import BasePose, camera_pose_of
from .geometry import default_camera_mount
from .protocol import SlaveStub
from .rgbd import png_io
from .rgbd.render import render
from .rgbd.scene import load_scene_file
from .service import ENV_LISTEN, ENV_SLAVE, ServiceConfig, TeleopService, run_script


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scene", required=True, help="scene descriptor JSON file")
    p.add_argument("--noise", type=float, default=None,
                   help="override the scene's depth noise sigma at 1 m")
    p.add_argument("--fps", type=float, default=30.0, help="frame rate (1-60)")


def _config(args, listen=None, slave=None) -> ServiceConfig:
    return ServiceConfig(
        scene_path=args.scene,
        listen_address=listen or service_mod.DEFAULT_LISTEN,
        slave_address=slave,
        frame_rate_hz=args.fps,
        noise_sigma_at_1m=args.noise,
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="doorteleop",
        description="RGBD door-parameter teleoperation workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the live host service")
    _add_common(p_serve)
    p_serve.add_argument("--listen", default=None,
                         help=f"operator socket address (env {ENV_LISTEN})")
    p_serve.add_argument("--slave", default=None,
                         help=f"slave endpoint address (env {ENV_SLAVE})")

    p_run = sub.add_parser("run-script", help="execute a click script headlessly")
    _add_common(p_run)
    p_run.add_argument("--script", required=True, help="JSON Lines click script")
    p_run.add_argument("--out", default=None, help="write the report JSON here")
    p_run.add_argument("--slave", default=None,
                       help=f"slave endpoint address (env {ENV_SLAVE})")

    p_render = sub.add_parser("render-once", help="render one frame to PNG files")
    p_render.add_argument("--scene", required=True)
    p_render.add_argument("--pose", default="0,0,0", help="base pose as x,y,heading")
    p_render.add_argument("--noise", type=float, default=None)
    p_render.add_argument("--out-color", required=True)
    p_render.add_argument("--out-depth", required=True)

    p_stub = sub.add_parser("slave-stub", help="run the recording slave endpoint")
    p_stub.add_argument("--listen", default="127.0.0.1:7601")
    p_stub.add_argument("--log", default=None, help="append received messages here (JSON Lines)")

    args = parser.parse_args(argv)

    if args.command == "serve":
        listen = args.listen or service_mod.env_default(ENV_LISTEN, service_mod.DEFAULT_LISTEN)
        slave = args.slave or service_mod.env_default(ENV_SLAVE, None)
        try:
            svc = TeleopService(_config(args, listen=listen, slave=slave))
        except Exception as e:
            print(f"startup error: {e}", file=sys.stderr)
            return 2
        host, port = svc.address
        print(
            f"serving on {host}:{port}" + (f", slave {slave}" if slave else ""),
            flush=True,
        )
        svc.serve_forever()
        return 0

    if args.command == "run-script":
        slave = args.slave or service_mod.env_default(ENV_SLAVE, None)
        try:
            report, code = run_script(
                _config(args, slave=slave), args.script, out_path=args.out
            )
        except (OSError, ValueError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        if args.out is None:
            json.dump(report, sys.stdout, indent=2, sort_keys=True)
            print()
        else:
            print(f"report written to {args.out} (ok={report['ok']})")
        return code

    if args.command == "render-once":
        scene = load_scene_file(args.scene)
        try:
            x, y, heading = (float(c) for c in args.pose.split(","))
        except ValueError:
            print("error: --pose expects x,y,heading", file=sys.stderr)
            return 2
        pose = camera_pose_of(BasePose(x, y, heading), default_camera_mount())
        frame = render(scene, pose, noise_sigma_at_1m=args.noise)
        png_io.save_color_png(frame, args.out_color)
        png_io.save_depth_png(frame, args.out_depth)
        print(f"wrote {args.out_color} and {args.out_depth}")
        return 0

    if args.command == "slave-stub":
        from .protocol import parse_address

        host, port = parse_address(args.listen)
        stub = SlaveStub(host, port).start()
        h, p = stub.address
        print(f"slave stub listening on {h}:{p}", flush=True)
        try:
            import time

            seen = 0
            while True:
                time.sleep(0.2)
                messages = stub.messages
                if args.log and len(messages) > seen:
                    with open(args.log, "a", encoding="utf-8") as f:
                        for m in messages[seen:]:
                            f.write(
                                json.dumps(
                                    {
                                        "type": m.type.value,
                                        "sequence": m.sequence,
                                        "payload": m.payload,
                                    },
                                    sort_keys=True,
                                )
                                + "\n"
                            )
                    seen = len(messages)
        except KeyboardInterrupt:
            stub.stop()
            return 0

    return 2


if __name__ == "__main__":
    sys.exit(main())
