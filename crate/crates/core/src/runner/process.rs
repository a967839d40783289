//! Child-process plumbing shared by builds and invocations.

use std::io::{self, Read, Write};
use std::os::unix::process::CommandExt;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

/// How a reaped child ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Exit {
    Code(i32),
    Signal(i32),
}

impl Exit {
    pub fn success(self) -> bool {
        self == Exit::Code(0)
    }
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exit::Code(c) => write!(f, "exit status {c}"),
            Exit::Signal(s) => write!(f, "killed by signal {s}"),
        }
    }
}

#[derive(Debug)]
pub(crate) struct Finished {
    /// `None` when the child was killed on timeout.
    pub exit: Option<Exit>,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub wall_time: Duration,
    /// Spawn to first stdout byte.
    pub first_output: Option<Duration>,
    pub cpu_time: Duration,
    pub peak_rss_bytes: u64,
}

impl Finished {
    #[cfg(test)]
    pub fn timed_out(&self) -> bool {
        self.exit.is_none()
    }
}

struct Reaped {
    status: libc::c_int,
    usage: libc::rusage,
}

fn wait_for(pid: libc::pid_t) -> io::Result<Reaped> {
    let mut status: libc::c_int = 0;
    // SAFETY: rusage is plain old data; zeroed is a valid value.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    loop {
        // SAFETY: pointers refer to live locals for the duration of the call.
        let r = unsafe { libc::wait4(pid, &mut status, 0, &mut usage) };
        if r == pid {
            return Ok(Reaped { status, usage });
        }
        let err = io::Error::last_os_error();
        if err.kind() != io::ErrorKind::Interrupted {
            return Err(err);
        }
    }
}

fn decode(status: libc::c_int) -> Exit {
    if libc::WIFEXITED(status) {
        Exit::Code(libc::WEXITSTATUS(status))
    } else if libc::WIFSIGNALED(status) {
        Exit::Signal(libc::WTERMSIG(status))
    } else {
        Exit::Code(-1)
    }
}

fn timeval(tv: libc::timeval) -> Duration {
    Duration::from_secs(tv.tv_sec as u64) + Duration::from_micros(tv.tv_usec as u64)
}

fn kill_group(pid: libc::pid_t) {
    // SAFETY: plain syscall; a stale group id only yields ESRCH.
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
}

/// Pins `pid` to one logical CPU.
pub(crate) fn pin_to_cpu(pid: libc::pid_t, cpu: usize) -> io::Result<()> {
    // SAFETY: cpu_set_t is plain old data manipulated through libc macros.
    unsafe {
        let mut set: libc::cpu_set_t = std::mem::zeroed();
        libc::CPU_ZERO(&mut set);
        libc::CPU_SET(cpu, &mut set);
        if libc::sched_setaffinity(pid, std::mem::size_of::<libc::cpu_set_t>(), &set) != 0 {
            return Err(io::Error::last_os_error());
        }
    }
    Ok(())
}

/// Spawns `cmd` in its own process group, feeds `stdin`, and collects output
/// and resource usage. The whole group is killed when `timeout` elapses.
pub(crate) fn run(
    cmd: &mut Command,
    stdin: &[u8],
    timeout: Duration,
    after_spawn: impl FnOnce(&Child),
) -> io::Result<Finished> {
    cmd.stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0);
    let started = Instant::now();
    let mut child = cmd.spawn()?;
    after_spawn(&child);
    let pid = child.id() as libc::pid_t;

    let mut child_stdin = child.stdin.take().expect("piped stdin");
    let input = stdin.to_vec();
    let writer = thread::spawn(move || {
        // The child may exit without reading; a broken pipe is not our error.
        let _ = child_stdin.write_all(&input);
    });

    let mut stdout = child.stdout.take().expect("piped stdout");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let mut first = None;
        let mut chunk = [0u8; 8192];
        loop {
            match stdout.read(&mut chunk) {
                Ok(0) | Err(_) => break,
                Ok(n) => {
                    first.get_or_insert_with(|| started.elapsed());
                    buf.extend_from_slice(&chunk[..n]);
                }
            }
        }
        (buf, first)
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let _ = tx.send(wait_for(pid));
    });
    let (reaped, timed_out) = match rx.recv_timeout(timeout) {
        Ok(r) => (r?, false),
        Err(_) => {
            kill_group(pid);
            let r = rx
                .recv()
                .map_err(|_| io::Error::other("wait thread vanished"))??;
            (r, true)
        }
    };
    let wall_time = started.elapsed();
    // Stragglers in the group would keep the pipes open.
    kill_group(pid);
    let _ = writer.join();
    let (stdout, first_output) = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    // `child` was reaped by wait4; dropping it does not wait again.
    drop(child);

    Ok(Finished {
        exit: (!timed_out).then(|| decode(reaped.status)),
        stdout,
        stderr,
        wall_time,
        first_output,
        cpu_time: timeval(reaped.usage.ru_utime) + timeval(reaped.usage.ru_stime),
        peak_rss_bytes: (reaped.usage.ru_maxrss.max(0) as u64) * 1024,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captures_output_and_exit() {
        let out = run(
            Command::new("sh").args(["-c", "cat; echo oops >&2; exit 3"]),
            b"hello",
            Duration::from_secs(5),
            |_| {},
        )
        .unwrap();
        assert_eq!(out.stdout, b"hello");
        assert_eq!(out.stderr, b"oops\n");
        assert_eq!(out.exit, Some(Exit::Code(3)));
        assert!(out.first_output.unwrap() <= out.wall_time);
    }

    #[test]
    fn timeout_kills_the_whole_group() {
        let started = Instant::now();
        let out = run(
            Command::new("sh").args(["-c", "sleep 30; echo late"]),
            b"",
            Duration::from_millis(200),
            |_| {},
        )
        .unwrap();
        assert!(out.timed_out());
        assert!(started.elapsed() < Duration::from_secs(10));
        assert!(out.stdout.is_empty());
    }

    #[test]
    fn cpu_time_is_accounted() {
        let out = run(
            Command::new("sh").args(["-c", "i=0; while [ $i -lt 200000 ]; do i=$((i+1)); done"]),
            b"",
            Duration::from_secs(60),
            |_| {},
        )
        .unwrap();
        assert!(out.exit.unwrap().success());
        assert!(out.cpu_time > Duration::ZERO);
        assert!(out.peak_rss_bytes > 0);
    }
}
