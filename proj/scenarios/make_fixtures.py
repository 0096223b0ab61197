#!/usr/bin/env python3
"""Regenerates the bundled scenario fixtures.

Each fixture is a scenario document: an inline graph (functions, cfgs,
call_sites, syscall_map), a syscall table, guards, optional effects, and
target blocks. Run from the scenarios/ directory: python3 make_fixtures.py
"""
import json
import os

HERE = os.path.dirname(os.path.abspath(__file__))


def fn(name, signature, entry=None, tags=None):
    d = {"name": name, "signature": signature}
    if entry:
        d["syscall_entry"] = entry
    if tags:
        d["tags"] = tags
    return d


def blocks(n, meta=None):
    """n plain blocks; meta maps index -> dict of extra block fields."""
    meta = meta or {}
    out = []
    for i in range(n):
        b = {"index": i}
        b.update(meta.get(i, {}))
        out.append(b)
    return out


def cfg(function, nblocks, edges, entry=0, meta=None):
    return {
        "function": function,
        "entry": entry,
        "blocks": blocks(nblocks, meta),
        "edges": edges,
    }


def direct(caller, block, callee):
    return {"caller_function": caller, "caller_block": block,
            "kind": "direct", "callee": callee}


def indirect(caller, block, signature):
    return {"caller_function": caller, "caller_block": block,
            "kind": "indirect", "signature": signature}


def arg_eq(arg, value):
    return {"arg": arg, "equals": value}


def guard(function, frm, to, *conds):
    return {"function": function, "from": frm, "to": to, "when": list(conds)}


def chain_edges(n):
    return [[i, i + 1] for i in range(n - 1)]


def write(name, doc):
    path = os.path.join(HERE, name)
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")
    print("wrote", path)


# ---------------------------------------------------------------- pipe_chain
# Producer/consumer dependency: read on a pipe file descriptor reaches the
# pipefs read path. Two producers (pipe, pipe2), one consumer (read).
pipe_chain = {
    "graph": {
        "functions": [
            fn("sys_pipe", "h_pipe", entry="pipe"),
            fn("sys_pipe2", "h_pipe2", entry="pipe2"),
            fn("sys_read", "h_rw", entry="read"),
            fn("pipe_read", "fs_read", tags=["fs_tag:pipefs"]),
            fn("sys_getpid", "h_nop", entry="getpid"),
            fn("sys_statx", "h_statx", entry="statx"),
        ],
        "cfgs": [
            cfg("sys_pipe", 2, [[0, 1]],
                meta={0: {"source_loc": "syscalls/sys_pipe.go:24"}}),
            cfg("sys_pipe2", 2, [[0, 1]],
                meta={0: {"source_loc": "syscalls/sys_pipe.go:40"}}),
            cfg("sys_read", 5, [[0, 1], [1, 2], [2, 3], [4, 3]],
                meta={0: {"source_loc": "syscalls/sys_read.go:30"},
                      4: {"source_loc": "syscalls/sys_read.go:55"}}),
            cfg("pipe_read", 3, [[0, 1], [1, 2]],
                meta={0: {"source_loc": "fs/pipe/pipe.go:40"},
                      1: {"source_loc": "fs/pipe/pipe.go:41"},
                      2: {"source_loc": "fs/pipe/pipe.go:47"}}),
            cfg("sys_getpid", 1, []),
            cfg("sys_statx", 3, [[0, 1], [1, 2]]),
        ],
        "call_sites": [direct("sys_read", 2, "pipe_read")],
        "syscall_map": {
            "pipe": "sys_pipe", "pipe2": "sys_pipe2", "read": "sys_read",
            "getpid": "sys_getpid", "statx": "sys_statx",
        },
    },
    "syscalls": {
        "pipe": {"handler": "sys_pipe", "produces": "fd", "arg_count": 1},
        "pipe2": {"handler": "sys_pipe2", "produces": "fd", "arg_count": 2},
        "read": {"handler": "sys_read", "consumes": [[0, "fd"]],
                 "arg_count": 2, "error_block": 4},
        "getpid": {"handler": "sys_getpid"},
        "statx": {"handler": "sys_statx", "arg_count": 2},
    },
    "guards": [],
    "targets": [{"function": "pipe_read", "block": 1}],
}

# --------------------------------------------------------------- const_ladder
# Chained constant dispatch: the request argument selects a case, and the
# constants on the dispatch path name the matching variants.
const_ladder = {
    "graph": {
        "functions": [
            fn("sys_ioctl", "h_ioctl", entry="ioctl"),
            fn("tty_getattr", "tty_op"),
            fn("sys_getpid", "h_nop", entry="getpid"),
            fn("sys_fcntl", "h_fcntl", entry="fcntl"),
            fn("sys_dup", "h_dup", entry="dup"),
            fn("sys_alarm", "h_alarm", entry="alarm"),
        ],
        "cfgs": [
            cfg("sys_ioctl", 7,
                [[0, 3], [0, 1], [1, 4], [1, 2], [2, 5], [2, 6],
                 [3, 6], [4, 6], [5, 6]],
                meta={0: {"constants": [0x5401],
                          "source_loc": "fs/tty/ioctl.go:18"},
                      1: {"constants": [0x5402],
                          "source_loc": "fs/tty/ioctl.go:22"},
                      2: {"constants": [0x541B],
                          "source_loc": "fs/tty/ioctl.go:26"}}),
            cfg("tty_getattr", 3, [[0, 1], [0, 2], [1, 2]],
                meta={1: {"source_loc": "fs/tty/line_discipline.go:71"}}),
            cfg("sys_getpid", 1, []),
            cfg("sys_fcntl", 3, [[0, 1], [0, 2], [1, 2]],
                meta={0: {"constants": [0x406]}}),
            cfg("sys_dup", 3, [[0, 1], [0, 2], [1, 2]]),
            cfg("sys_alarm", 3, [[0, 1], [0, 2], [1, 2]]),
        ],
        "call_sites": [direct("sys_ioctl", 3, "tty_getattr")],
        "syscall_map": {
            "ioctl": "sys_ioctl", "getpid": "sys_getpid", "fcntl": "sys_fcntl",
            "dup": "sys_dup", "alarm": "sys_alarm",
        },
    },
    "syscalls": {
        "ioctl": {"handler": "sys_ioctl", "arg_count": 2, "variant_arg": 1,
                  "variants": {"ioctl$TCGETS": 0x5401,
                               "ioctl$TCSETS": 0x5402,
                               "ioctl$FIONREAD": 0x541B}},
        "getpid": {"handler": "sys_getpid"},
        "fcntl": {"handler": "sys_fcntl", "arg_count": 2},
        "dup": {"handler": "sys_dup", "arg_count": 1},
        "alarm": {"handler": "sys_alarm", "arg_count": 1},
    },
    "guards": [
        guard("sys_ioctl", 0, 3, arg_eq(1, 0x5401)),
        guard("tty_getattr", 0, 1, arg_eq(0, 0x1F)),
        guard("sys_dup", 0, 1, arg_eq(0, 0x2A)),
        guard("sys_alarm", 0, 1, arg_eq(0, 0x3C)),
        guard("sys_ioctl", 1, 4, arg_eq(1, 0x5402)),
        guard("sys_ioctl", 2, 5, arg_eq(1, 0x541B)),
        guard("sys_fcntl", 0, 1, arg_eq(1, 0x406)),
    ],
    "targets": [{"function": "tty_getattr", "block": 1}],
}

# ---------------------------------------------------------------- error_fork
# Error-handling fork: the ok path needs a valid resource argument, the error
# path forks again on an argument constant. Target sits in the deep error
# branch, tagged for the memory error-handling rule.
error_fork = {
    "graph": {
        "functions": [
            fn("sys_copyout", "h_copy", entry="copyout"),
            fn("sys_mmap", "h_mem", entry="mmap"),
            fn("sys_munmap", "h_mem2", entry="munmap"),
            fn("sys_mprotect", "h_mem3", entry="mprotect"),
            fn("sys_getpid", "h_nop", entry="getpid"),
        ],
        "cfgs": [
            cfg("sys_copyout", 5,
                [[0, 1], [0, 2], [1, 4], [2, 3], [2, 4], [3, 4]],
                meta={2: {"source_loc": "mm/copy.go:88"},
                      3: {"source_loc": "mm/copy.go:92",
                          "tags": ["marker:mem_error_handling"]}}),
            cfg("sys_mmap", 2, [[0, 1]]),
            cfg("sys_munmap", 3, [[0, 2], [1, 2]]),
            cfg("sys_mprotect", 3, [[0, 1], [2, 1]]),
            cfg("sys_getpid", 1, []),
        ],
        "call_sites": [],
        "syscall_map": {
            "copyout": "sys_copyout", "mmap": "sys_mmap",
            "munmap": "sys_munmap", "mprotect": "sys_mprotect",
            "getpid": "sys_getpid",
        },
    },
    "syscalls": {
        "copyout": {"handler": "sys_copyout", "arg_count": 2},
        "mmap": {"handler": "sys_mmap", "produces": "mem", "arg_count": 2},
        "munmap": {"handler": "sys_munmap", "consumes": [[0, "mem"]],
                   "arg_count": 1, "error_block": 1},
        "mprotect": {"handler": "sys_mprotect", "consumes": [[0, "mem"]],
                     "arg_count": 2, "error_block": 2},
        "getpid": {"handler": "sys_getpid"},
    },
    "guards": [
        guard("sys_copyout", 0, 1, {"arg": 0, "resource_valid": True}),
        guard("sys_copyout", 2, 3, arg_eq(1, 0xBAD)),
    ],
    "targets": [{"function": "sys_copyout", "block": 3}],
}

# ---------------------------------------------------------------- deep_chain
# A deep call chain gated on four argument constants produces a long distance
# gradient; fat unrelated handlers make the reachable slice a small fraction
# of the program.
def deep_chain_doc():
    functions = [fn("sys_splice", "h_splice", entry="splice")]
    cfgs = [cfg("sys_splice", 3, [[0, 1], [0, 2], [1, 2]],
                meta={0: {"source_loc": "syscalls/sys_splice.go:18"}})]
    call_sites = [direct("sys_splice", 1, "sp1")]
    guards = [guard("sys_splice", 0, 1, arg_eq(0, 11))]
    gate_args = {2: (1, 22), 4: (2, 33), 6: (3, 44)}
    for i in range(1, 9):
        name = "sp%d" % i
        functions.append(fn(name, "sp_sig%d" % i))
        if i == 8:
            cfgs.append(cfg(name, 3, [[0, 1], [1, 2]],
                            meta={1: {"source_loc": "fs/splice/loop.go:120"}}))
        elif i in gate_args:
            arg, val = gate_args[i]
            cfgs.append(cfg(name, 3, [[0, 1], [0, 2], [1, 2]]))
            guards.append(guard(name, 0, 1, arg_eq(arg, val)))
            call_sites.append(direct(name, 1, "sp%d" % (i + 1)))
        else:
            cfgs.append(cfg(name, 2, [[0, 1]]))
            call_sites.append(direct(name, 1, "sp%d" % (i + 1)))
    noise = ["sys_getpid", "sys_gettid", "sys_sched_yield", "sys_brk"]
    noise_entry = ["getpid", "gettid", "sched_yield", "brk"]
    for nname, entry in zip(noise, noise_entry):
        functions.append(fn(nname, "h_" + entry, entry=entry))
        cfgs.append(cfg(nname, 20, chain_edges(20)))
    syscall_map = {"splice": "sys_splice"}
    syscall_map.update({e: n for n, e in zip(noise, noise_entry)})
    syscalls = {"splice": {"handler": "sys_splice", "arg_count": 4}}
    for nname, entry in zip(noise, noise_entry):
        syscalls[entry] = {"handler": nname, "arg_count": 1}
    return {
        "graph": {"functions": functions, "cfgs": cfgs,
                  "call_sites": call_sites, "syscall_map": syscall_map},
        "syscalls": syscalls,
        "guards": guards,
        "targets": [{"function": "sp8", "block": 1}],
    }


# -------------------------------------------------------------- indirect_call
# The only route to the target goes through an indirect call site resolved by
# signature. Without indirect resolution the reachable set collapses to the
# target's own function.
indirect_call = {
    "graph": {
        "functions": [
            fn("sys_socket", "h_socket", entry="socket"),
            fn("sys_sendmsg", "h_send", entry="sendmsg"),
            fn("sock_impl_send", "impl_s"),
            fn("file_impl_send", "impl_t"),
            fn("sys_getpid", "h_nop", entry="getpid"),
            fn("sys_alarm", "h_alarm", entry="alarm"),
            fn("sys_dup2", "h_dup", entry="dup2"),
            fn("sys_fsync", "h_fsync", entry="fsync"),
        ],
        "cfgs": [
            cfg("sys_socket", 2, [[0, 1]]),
            cfg("sys_sendmsg", 4, [[0, 1], [0, 2], [1, 2], [3, 2]],
                meta={0: {"source_loc": "syscalls/sys_socket.go:300",
                          "constants": [0x11, 0x212, 0x3333, 0x4004, 0x5e5,
                                        0x66, 0x777, 0x888, 0x99, 0xa1a]}}),
            cfg("sock_impl_send", 4, [[0, 1], [0, 3], [1, 2], [1, 3], [2, 3]],
                meta={0: {"constants": [0x51EE, 0x9009, 0xa0a, 0xbb, 0xc1c,
                                        0xd2d, 0xe3e, 0xf4f, 0x1010, 0x1111,
                                        0x1212, 0x1313]},
                      2: {"source_loc": "socket/unix/transport.go:77"}}),
            cfg("file_impl_send", 2, [[0, 1]]),
            cfg("sys_getpid", 1, []),
            cfg("sys_alarm", 3, [[0, 1], [0, 2], [1, 2]]),
            cfg("sys_dup2", 3, [[0, 1], [1, 2]]),
            cfg("sys_fsync", 2, [[0, 1]]),
        ],
        "call_sites": [indirect("sys_sendmsg", 1, "impl_s")],
        "syscall_map": {
            "socket": "sys_socket", "sendmsg": "sys_sendmsg",
            "getpid": "sys_getpid", "alarm": "sys_alarm",
            "dup2": "sys_dup2", "fsync": "sys_fsync",
        },
    },
    "syscalls": {
        "socket": {"handler": "sys_socket", "produces": "sock", "arg_count": 2},
        "sendmsg": {"handler": "sys_sendmsg", "consumes": [[0, "sock"]],
                    "arg_count": 3, "error_block": 3, "variant_arg": 2,
                    "variants": {"sendmsg$UNIX": 0x51EE}},
        "getpid": {"handler": "sys_getpid"},
        "alarm": {"handler": "sys_alarm", "arg_count": 1},
        "dup2": {"handler": "sys_dup2", "arg_count": 2},
        "fsync": {"handler": "sys_fsync", "arg_count": 1},
    },
    "guards": [
        guard("sys_sendmsg", 0, 1, arg_eq(1, 0xBEEF)),
        guard("sock_impl_send", 0, 1, arg_eq(2, 0x51EE)),
        guard("sys_alarm", 0, 1, arg_eq(0, 7)),
    ],
    "targets": [{"function": "sock_impl_send", "block": 1}],
}

# ---------------------------------------------------------------- decoy_rich
# Four syscalls get inferred, one is truly useful: fstatfs climbs a three-gate
# ladder, sets up state, and calls into the devpts statfs path. statfs shares
# the call-chain inference but cannot satisfy the state flag; the two pts
# producers come from the filesystem rule.
decoy_rich = {
    "graph": {
        "functions": [
            fn("sys_fstatfs", "h_fstatfs", entry="fstatfs"),
            fn("sys_statfs", "h_statfs", entry="statfs"),
            fn("pts_statfs", "fs_statfs", tags=["fs_tag:devpts"]),
            fn("sys_openat_ptmx", "h_open1", entry="openat$ptmx"),
            fn("sys_open_pts", "h_open2", entry="syz_open_pts"),
            fn("sys_readlink", "h_rl", entry="readlink"),
            fn("sys_epoll_wait", "h_ew", entry="epoll_wait"),
        ],
        "cfgs": [
            # Stateful walk: each correctly argued call advances one step.
            cfg("sys_fstatfs", 6,
                [[0, 1], [0, 2], [0, 3], [0, 4], [1, 2], [1, 4], [2, 3],
                 [2, 4], [3, 4], [5, 4]],
                meta={0: {"source_loc": "syscalls/sys_statfs.go:60",
                          "constants": [0x1A0, 0x2B0, 0x3C0]},
                      5: {"source_loc": "syscalls/sys_statfs.go:84"}}),
            cfg("sys_statfs", 7,
                [[0, 1], [0, 6], [1, 2], [2, 3], [3, 4], [4, 5], [5, 6]],
                meta={0: {"source_loc": "syscalls/sys_statfs.go:30"}}),
            cfg("pts_statfs", 4, [[0, 1], [0, 3], [1, 2], [1, 3], [2, 3]],
                meta={2: {"source_loc": "fs/devpts/devpts.go:210"}}),
            cfg("sys_openat_ptmx", 2, [[0, 1]]),
            cfg("sys_open_pts", 2, [[0, 1]]),
            cfg("sys_readlink", 12, chain_edges(12)),
            cfg("sys_epoll_wait", 12, chain_edges(12)),
        ],
        "call_sites": [
            direct("sys_fstatfs", 3, "pts_statfs"),
            direct("sys_statfs", 5, "pts_statfs"),
        ],
        "syscall_map": {
            "fstatfs": "sys_fstatfs", "statfs": "sys_statfs",
            "openat$ptmx": "sys_openat_ptmx", "syz_open_pts": "sys_open_pts",
            "readlink": "sys_readlink", "epoll_wait": "sys_epoll_wait",
        },
    },
    "syscalls": {
        "fstatfs": {"handler": "sys_fstatfs", "consumes": [[0, "pts_fd"]],
                    "arg_count": 4, "error_block": 5},
        "statfs": {"handler": "sys_statfs", "arg_count": 2},
        "openat$ptmx": {"handler": "sys_openat_ptmx", "produces": "pts_fd",
                        "arg_count": 1},
        "syz_open_pts": {"handler": "sys_open_pts", "produces": "pts_fd",
                         "arg_count": 1},
        "readlink": {"handler": "sys_readlink", "arg_count": 2},
        "epoll_wait": {"handler": "sys_epoll_wait", "arg_count": 2},
    },
    "guards": [
        # entry dispatch: one sampling step per call, in order
        guard("sys_fstatfs", 0, 1, arg_eq(1, 5),
              {"flag": "fst_step1", "set": False},
              {"flag": "sb_busy", "set": False}),
        guard("sys_fstatfs", 0, 2, arg_eq(1, 7),
              {"flag": "fst_step1", "set": True},
              {"flag": "fst_step2", "set": False}),
        guard("sys_fstatfs", 0, 3, arg_eq(1, 9),
              {"flag": "fst_step2", "set": True}),
        # statically present continuations, never taken while frozen
        guard("sys_fstatfs", 1, 2, {"flag": "sb_frozen", "set": True}),
        guard("sys_fstatfs", 2, 3, {"flag": "sb_frozen", "set": True}),
        guard("sys_statfs", 0, 1, arg_eq(0, 0x7777), arg_eq(1, 0x8888)),
        guard("pts_statfs", 0, 1, {"flag": "sb_locked", "set": True},
              {"flag": "sb_busy", "set": False}),
        guard("pts_statfs", 1, 2, arg_eq(3, 0x2F)),
    ],
    "effects": [
        {"function": "sys_fstatfs", "block": 1, "set_flag": "fst_step1"},
        {"function": "sys_fstatfs", "block": 2, "set_flag": "fst_step2"},
        {"function": "sys_fstatfs", "block": 3, "set_flag": "sb_locked"},
        {"function": "sys_statfs", "block": 0, "set_flag": "sb_busy"},
    ],
    "targets": [{"function": "pts_statfs", "block": 2}],
}

# ------------------------------------------------------------------ default kb
kb_default = [
    {"predicate": {"kind": "fs_tag", "value": "devpts"},
     "syscalls": ["openat$ptmx", "syz_open_pts"]},
    {"predicate": {"kind": "fs_tag", "value": "eventfd"},
     "syscalls": ["eventfd2", "eventfd"]},
    {"predicate": {"kind": "fs_tag", "value": "kernfs"},
     "syscalls": ["syz_open_procfs"]},
    {"predicate": {"kind": "fs_tag", "value": "pipefs"},
     "syscalls": ["pipe", "pipe2"]},
    {"predicate": {"kind": "fs_tag", "value": "signalfd"},
     "syscalls": ["signalfd4", "signalfd"]},
    {"predicate": {"kind": "fs_tag", "value": "timerfd"},
     "syscalls": ["timerfd_create", "timerfd_settime", "timerfd_gettime"]},
    {"predicate": {"kind": "marker", "value": "mem_error_handling"},
     "syscalls": ["mmap", "munmap", "mprotect"]},
    {"predicate": {"kind": "marker", "value": "perm_error_handling"},
     "syscalls": ["setuid", "setresuid"]},
    {"predicate": {"kind": "marker", "value": "seccomp"},
     "syscalls": ["prctl$PR_SET_SECCOMP", "seccomp$SECCOMP_SET_MODE_STRICT",
                  "seccomp$SECCOMP_SET_MODE_FILTER",
                  "seccomp$SECCOMP_SET_MODE_FILTER_LISTENER"]},
    {"predicate": {"kind": "marker", "value": "readiness"},
     "syscalls": ["pselect6", "epoll_ctl$EPOLL_CTL_ADD", "ppoll", "poll"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip/network/ipv4/icmp"},
     "syscalls": ["syz_emit_ethernet$ipv4_icmp", "syz_emit_ethernet$ipv4",
                  "syz_emit_ethernet"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip/network/ipv4/igmp"},
     "syscalls": ["syz_emit_ethernet$ipv4_igmp", "syz_emit_ethernet$ipv4",
                  "syz_emit_ethernet"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip/network/ipv4"},
     "syscalls": ["syz_emit_ethernet$ipv4", "syz_emit_ethernet"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip/network/ipv6/icmp"},
     "syscalls": ["syz_emit_ethernet$ipv6_icmp", "syz_emit_ethernet$ipv6",
                  "syz_emit_ethernet"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip/network/ipv6"},
     "syscalls": ["syz_emit_ethernet$ipv6", "syz_emit_ethernet"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip/network/arp"},
     "syscalls": ["syz_emit_ethernet$arp", "syz_emit_ethernet"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip/transport/tcp"},
     "syscalls": ["syz_emit_ethernet$ipv4_tcp", "syz_emit_ethernet$ipv6_tcp",
                  "syz_emit_ethernet"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip/transport/udp"},
     "syscalls": ["syz_emit_ethernet$ipv4_udp", "syz_emit_ethernet$ipv6_udp",
                  "syz_emit_ethernet"]},
    {"predicate": {"kind": "path_prefix", "value": "pkg/tcpip"},
     "syscalls": ["syz_emit_ethernet"]},
]


def main():
    write("pipe_chain.json", pipe_chain)
    write("const_ladder.json", const_ladder)
    write("error_fork.json", error_fork)
    write("deep_chain.json", deep_chain_doc())
    write("indirect_call.json", indirect_call)
    write("decoy_rich.json", decoy_rich)
    write("kb_default.json", kb_default)
    with open(os.path.join(HERE, "crash_example.trace"), "w") as f:
        f.write("panicHandler(0x0)\n")
        f.write("pipe_read(0x2,0x40)\n")
        f.write("doSyscallInvoke(0x1,0xa5)\n")
        f.write("runApp()\n")
    with open(os.path.join(HERE, "syscall_nrs.json"), "w") as f:
        json.dump({"0xa5": "statx", "0x0": "read"}, f, indent=1)
        f.write("\n")
    print("wrote crash_example.trace, syscall_nrs.json")


if __name__ == "__main__":
    main()
