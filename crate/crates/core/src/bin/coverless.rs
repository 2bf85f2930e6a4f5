use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::rngs::OsRng;

use coverless::detection::{detection_file_json, label_pool, stego_detection_file_json};
use coverless::eval::{capacity_csv, robustness_csv, SWEEP_MESSAGE_BITS};
use coverless::extractor::{ascii_to_bits, bits_to_ascii};
use coverless::keying::DEFAULT_KEY_LENGTH;
use coverless::*;

#[derive(Parser)]
#[command(name = "coverless", version, about = "Coverless image steganography via object-keyed sequence matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the label → scrambling factor dictionary from a detection corpus.
    BuildDict {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long, default_value = "ascending")]
        order: FactorOrder,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Derive a receiver's sequence key and write it as a key file.
    Keygen {
        #[arg(long)]
        receiver_id: u64,
        #[arg(long, default_value_t = DEFAULT_KEY_LENGTH as u32)]
        key_length: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a fresh 32-byte transport secret.
    GenPsk {
        #[arg(long)]
        out: PathBuf,
    },
    /// Select stego images for a message and seal the position keys.
    Hide {
        #[arg(long)]
        message: PathBuf,
        #[arg(long, value_enum, default_value_t = MessageFormat::Bytes)]
        message_format: MessageFormat,
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[command(flatten)]
        key: KeyArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long)]
        psk: PathBuf,
        /// Seed for image selection within a factor; random when absent.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_manifest: PathBuf,
        #[arg(long)]
        out_keyfile: PathBuf,
    },
    /// Recover a message from stego detections and a sealed keyfile.
    Extract {
        /// Detections of the received images in manifest order; null for lost images.
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        dict: PathBuf,
        #[command(flatten)]
        key: KeyArgs,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long)]
        psk: PathBuf,
        #[arg(long)]
        keyfile: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a synthetic detection corpus.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 50)]
        labels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pull the manifest's images out of a corpus file, standing in for the receiver's detector.
    StegoDetections {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Capacity or robustness benchmarks, written as CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 0.15)]
    min_area: f64,
    #[arg(long, default_value_t = 0.5)]
    min_conf: f64,
}

impl ThresholdArgs {
    fn get(&self) -> Result<FilterThresholds> {
        FilterThresholds::new(self.min_area, self.min_conf)
    }
}

#[derive(Args)]
struct KeyArgs {
    #[arg(long, required_unless_present = "key")]
    receiver_id: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_KEY_LENGTH as u32)]
    key_length: u32,
    /// Sequence key file; overrides --receiver-id.
    #[arg(long)]
    key: Option<PathBuf>,
}

impl KeyArgs {
    fn load(&self) -> Result<SequenceKey> {
        match (&self.key, self.receiver_id) {
            (Some(path), _) => SequenceKey::from_file_bytes(&read(path)?),
            (None, Some(id)) => derive_sequence_key(id, self.key_length as usize),
            (None, None) => Err(Error::InvalidArgument("--receiver-id or --key is required".into())),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MessageFormat {
    /// Raw bytes, expanded MSB first.
    Bytes,
    /// ASCII 0/1 characters.
    Bits,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchMode {
    Capacity,
    Robustness,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    mode: BenchMode,
    #[arg(long, value_delimiter = ',', default_value = "10000")]
    t_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "50")]
    factor_grid: Vec<u64>,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = SWEEP_MESSAGE_BITS)]
    message_bits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    drop_prob: f64,
    /// Confidence multiplier; 0 disables decay.
    #[arg(long, default_value_t = 0.0)]
    conf_decay: f64,
    #[arg(long, default_value_t = 0.0)]
    flip_prob: f64,
    /// Corpus size for robustness runs.
    #[arg(long, default_value_t = 200)]
    images: usize,
    #[arg(long, default_value_t = 50)]
    labels: usize,
    #[arg(long, default_value_t = DEFAULT_KEY_LENGTH)]
    key_length: usize,
    #[arg(long)]
    out: PathBuf,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, data).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_psk(path: &Path) -> Result<TransportSecret> {
    TransportSecret::from_slice(&read(path)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildDict {
            detections,
            order,
            thresholds,
            out,
        } => {
            let records = parse_detection_file(&read(&detections)?)?;
            let dict = build_dictionary(&records, &thresholds.get()?, order)?;
            write(&out, dict.to_json())?;
            println!("dictionary: {} labels from {} images", dict.len(), records.len());
        }
        Command::Keygen {
            receiver_id,
            key_length,
            out,
        } => {
            let key = derive_sequence_key(receiver_id, key_length as usize)?;
            write(&out, key.to_file_bytes())?;
            println!("sequence key: {} bits for receiver {receiver_id}", key.len());
        }
        Command::GenPsk { out } => {
            write(&out, TransportSecret::generate(&mut OsRng).as_bytes())?;
            println!("transport secret written");
        }
        Command::Hide {
            message,
            message_format,
            detections,
            dict,
            key,
            thresholds,
            psk,
            seed,
            out_manifest,
            out_keyfile,
        } => {
            let raw = read(&message)?;
            let message = match message_format {
                MessageFormat::Bytes => SecretMessage::from_bytes(&raw),
                MessageFormat::Bits => {
                    let text = String::from_utf8(raw).map_err(|e| Error::parse("bit string", e))?;
                    SecretMessage::from_bits(ascii_to_bits(&text)?)
                }
            };
            if message.is_empty() {
                return Err(Error::EmptyMessage);
            }
            let thresholds = thresholds.get()?;
            let records = parse_detection_file(&read(&detections)?)?;
            let dict = MappingDictionary::from_json(&read(&dict)?)?;
            let secret = load_psk(&psk)?;
            let key = key.load()?;
            let index = build_index(&records, &dict, &key, &thresholds)?;
            let result = hide(&message, &index, seed)?;
            let sealed = seal_keys(&result.position_keys, &secret, &mut OsRng);
            write(&out_manifest, result.manifest().to_json())?;
            write(&out_keyfile, sealed)?;
            println!("m = {} stego images", result.image_count());
            println!("{:.3} bits/image over {} bits", result.bits_per_image(), message.len());
        }
        Command::Extract {
            detections,
            dict,
            key,
            thresholds,
            psk,
            keyfile,
            out,
        } => {
            let secret = load_psk(&psk)?;
            let keys = open_keys(&read(&keyfile)?, &secret)?;
            let records = parse_stego_detection_file(&read(&detections)?)?;
            let dict = MappingDictionary::from_json(&read(&dict)?)?;
            let key = key.load()?;
            let report = extract(&records, &keys, &dict, &key, &thresholds.get()?)?;
            match report.to_bytes() {
                Ok(bytes) => write(&out, bytes)?,
                Err(_) => {
                    write(&out, bits_to_ascii(&report.bits))?;
                    println!("{} bits are not byte aligned; wrote raw bits", report.bits.len());
                }
            }
            println!("padded_bits {}", report.padded_bits);
            println!("segments {} ({} padded)", report.segment_status.len(), report.padded_segments());
        }
        Command::Synth {
            seed,
            count,
            labels,
            out,
        } => {
            if labels == 0 {
                return Err(Error::InvalidArgument("--labels must be positive".into()));
            }
            let records = synthetic_detector(seed, count, &label_pool(labels));
            write(&out, detection_file_json(&records))?;
            println!("{count} synthetic records");
        }
        Command::StegoDetections {
            detections,
            manifest,
            out,
        } => {
            let records = parse_detection_file(&read(&detections)?)?;
            let manifest = StegoManifest::from_json(&read(&manifest)?)?;
            let by_id: HashMap<&str, &DetectionRecord> = records.iter().map(|r| (r.image_id.as_str(), r)).collect();
            let picked: Vec<Option<DetectionRecord>> = manifest
                .images
                .iter()
                .map(|id| by_id.get(id.as_str()).map(|r| (*r).clone()))
                .collect();
            let missing = picked.iter().filter(|r| r.is_none()).count();
            write(&out, stego_detection_file_json(&picked))?;
            println!("{} stego records, {missing} missing", picked.len());
        }
        Command::Bench(args) => bench(args)?,
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let csv = match args.mode {
        BenchMode::Capacity => {
            let cells = capacity_sweep(&args.t_grid, &args.factor_grid, args.trials, args.message_bits, args.seed)?;
            for c in &cells {
                println!("t={} F={}: {:.3} bits/image", c.t, c.factors, c.mean_bits_per_image);
            }
            capacity_csv(&cells)
        }
        BenchMode::Robustness => {
            let model = AttackModel::new(args.drop_prob, args.conf_decay, args.flip_prob)?;
            let corpus = CorpusParams {
                images: args.images,
                labels: args.labels,
                key_length: args.key_length,
                message_bits: args.message_bits,
            };
            if corpus.labels == 0 || corpus.message_bits == 0 {
                return Err(Error::InvalidArgument("labels and message bits must be positive".into()));
            }
            let summary = run_robustness(&corpus, &model, args.trials, args.seed)?;
            println!("mean R = {:.4} (sd {:.4})", summary.mean, summary.stddev);
            robustness_csv(&corpus, &model, &summary)
        }
    };
    write(&args.out, csv)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
