//! C ABI for the coverless steganography engine.
//!
//! Every fallible function returns a [`CoverlessStatus`]; on failure the
//! message is available from [`coverless_last_error`] on the same thread.
//! Objects cross the boundary as opaque handles; each `*_free` function
//! accepts NULL. Byte outputs are [`CoverlessBuffer`]s released with
//! [`coverless_buffer_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use coverless::{
    build_dictionary, build_index, derive_sequence_key, extract, hide, open_keys, parse_detection_file,
    parse_stego_detection_file, seal_keys, Error, FactorOrder, FilterThresholds, HideResult, MappingDictionary,
    PositionKey, SecretMessage, SequenceKey, StegoIndex, TransportSecret,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverlessStatus {
    Ok = 0,
    InvalidArgument = 1,
    Parse = 2,
    Validation = 3,
    Format = 4,
    NoUsableImages = 5,
    NotInDictionary = 6,
    UnmatchableMessage = 7,
    EmptyMessage = 8,
    Protocol = 9,
    Framing = 10,
    Authentication = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for CoverlessStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => Self::Parse,
            Error::Validation { .. } => Self::Validation,
            Error::Format(_) => Self::Format,
            Error::EmptyDictionary | Error::EmptyIndex => Self::NoUsableImages,
            Error::NotInDictionary(_) | Error::UnknownFactor(_) => Self::NotInDictionary,
            Error::UnmatchableBit { .. } => Self::UnmatchableMessage,
            Error::EmptyMessage => Self::EmptyMessage,
            Error::Protocol(_) => Self::Protocol,
            Error::Framing(_) => Self::Framing,
            Error::Authentication => Self::Authentication,
            Error::Io(_) => Self::Io,
            Error::InvalidThresholds(_)
            | Error::InvalidLength(_)
            | Error::IndexOutOfRange { .. }
            | Error::InvalidArgument(_) => Self::InvalidArgument,
        }
    }
}

/// Heap bytes owned by the caller after return.
#[repr(C)]
pub struct CoverlessBuffer {
    pub data: *mut u8,
    pub len: usize,
}

impl CoverlessBuffer {
    fn from_vec(v: Vec<u8>) -> Self {
        let boxed = v.into_boxed_slice();
        let len = boxed.len();
        Self {
            data: Box::into_raw(boxed) as *mut u8,
            len,
        }
    }
}

pub struct CoverlessDictionary(MappingDictionary);
pub struct CoverlessKey(SequenceKey);
pub struct CoverlessIndex(StegoIndex);
pub struct CoverlessHideResult {
    result: HideResult,
    image_ids: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(bytes).unwrap_or_default());
}

enum Failure {
    Engine(Error),
    Argument(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CoverlessStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            CoverlessStatus::Ok
        }
        Ok(Err(Failure::Engine(e))) => {
            set_last_error(e.to_string());
            CoverlessStatus::from(&e)
        }
        Ok(Err(Failure::Argument(msg))) => {
            set_last_error(msg);
            CoverlessStatus::InvalidArgument
        }
        Err(_) => {
            set_last_error("internal panic");
            CoverlessStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must be NULL with `len == 0`, or point to `len` readable bytes.
unsafe fn bytes<'a>(ptr: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Argument("null data pointer"));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or(Failure::Argument("null handle"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Argument("null output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_buffer(out: *mut CoverlessBuffer, data: Vec<u8>) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Argument("null output buffer"));
    }
    *out = CoverlessBuffer::from_vec(data);
    Ok(())
}

unsafe fn position_keys(starts: *const u32, lengths: *const u32, count: usize) -> Result<Vec<PositionKey>, Failure> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if starts.is_null() || lengths.is_null() {
        return Err(Failure::Argument("null position key array"));
    }
    let s = std::slice::from_raw_parts(starts, count);
    let l = std::slice::from_raw_parts(lengths, count);
    Ok(s.iter().zip(l).map(|(&a, &b)| PositionKey::new(a, b)).collect())
}

unsafe fn psk(secret: *const u8) -> Result<TransportSecret, Failure> {
    Ok(TransportSecret::from_slice(bytes(secret, 32)?)?)
}

fn thresholds(min_area: f64, min_conf: f64) -> Result<FilterThresholds, Failure> {
    Ok(FilterThresholds::new(min_area, min_conf)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn coverless_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn coverless_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `buffer.data` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn coverless_buffer_free(buffer: CoverlessBuffer) {
    if !buffer.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(buffer.data, buffer.len)));
    }
}

/// Builds a dictionary from a detection interchange document.
///
/// # Safety
/// `json` must point to `json_len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_dictionary_build(
    json: *const u8,
    json_len: usize,
    min_area: f64,
    min_conf: f64,
    descending: bool,
    out: *mut *mut CoverlessDictionary,
) -> CoverlessStatus {
    guard(|| {
        let records = parse_detection_file(bytes(json, json_len)?)?;
        let order = if descending { FactorOrder::Descending } else { FactorOrder::Ascending };
        let dict = build_dictionary(&records, &thresholds(min_area, min_conf)?, order)?;
        put(out, CoverlessDictionary(dict))
    })
}

/// # Safety
/// `json` must point to `json_len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_dictionary_from_json(
    json: *const u8,
    json_len: usize,
    out: *mut *mut CoverlessDictionary,
) -> CoverlessStatus {
    guard(|| put(out, CoverlessDictionary(MappingDictionary::from_json(bytes(json, json_len)?)?)))
}

/// # Safety
/// `dict` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_dictionary_to_json(
    dict: *const CoverlessDictionary,
    out: *mut CoverlessBuffer,
) -> CoverlessStatus {
    guard(|| put_buffer(out, handle(dict)?.0.to_json().into_bytes()))
}

/// Number of labels, or 0 for NULL.
///
/// # Safety
/// `dict` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coverless_dictionary_len(dict: *const CoverlessDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `dict` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coverless_dictionary_free(dict: *mut CoverlessDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_key_derive(receiver_id: u64, t: u32, out: *mut *mut CoverlessKey) -> CoverlessStatus {
    guard(|| put(out, CoverlessKey(derive_sequence_key(receiver_id, t as usize)?)))
}

/// Loads a `CSSK` sequence key file.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_key_from_file_bytes(
    data: *const u8,
    len: usize,
    out: *mut *mut CoverlessKey,
) -> CoverlessStatus {
    guard(|| put(out, CoverlessKey(SequenceKey::from_file_bytes(bytes(data, len)?)?)))
}

/// # Safety
/// `key` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_key_to_file_bytes(key: *const CoverlessKey, out: *mut CoverlessBuffer) -> CoverlessStatus {
    guard(|| put_buffer(out, handle(key)?.0.to_file_bytes()))
}

/// # Safety
/// `key` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coverless_key_len(key: *const CoverlessKey) -> usize {
    key.as_ref().map_or(0, |k| k.0.len())
}

/// # Safety
/// `key` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coverless_key_free(key: *mut CoverlessKey) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

/// Builds the per-receiver image database from a detection corpus.
///
/// # Safety
/// `json` must point to `json_len` readable bytes; handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_index_build(
    json: *const u8,
    json_len: usize,
    dict: *const CoverlessDictionary,
    key: *const CoverlessKey,
    min_area: f64,
    min_conf: f64,
    out: *mut *mut CoverlessIndex,
) -> CoverlessStatus {
    guard(|| {
        let records = parse_detection_file(bytes(json, json_len)?)?;
        let index = build_index(&records, &handle(dict)?.0, &handle(key)?.0, &thresholds(min_area, min_conf)?)?;
        put(out, CoverlessIndex(index))
    })
}

/// # Safety
/// `index` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coverless_index_factor_count(index: *const CoverlessIndex) -> usize {
    index.as_ref().map_or(0, |i| i.0.factor_count())
}

/// # Safety
/// `index` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coverless_index_free(index: *mut CoverlessIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Hides `message` (bytes, expanded MSB first). Image choice is seeded when
/// `use_seed` is true, random otherwise.
///
/// # Safety
/// `index` must be live; `message` must point to `message_len` bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_hide(
    index: *const CoverlessIndex,
    message: *const u8,
    message_len: usize,
    use_seed: bool,
    seed: u64,
    out: *mut *mut CoverlessHideResult,
) -> CoverlessStatus {
    guard(|| {
        let index = handle(index)?;
        let message = SecretMessage::from_bytes(bytes(message, message_len)?);
        let result = hide(&message, &index.0, use_seed.then_some(seed))?;
        let image_ids = result
            .stego_images
            .iter()
            .map(|id| CString::new(id.as_str()).map_err(|_| Failure::Argument("image id contains NUL")))
            .collect::<Result<Vec<_>, _>>()?;
        put(out, CoverlessHideResult { result, image_ids })
    })
}

/// Number of stego images (and position keys).
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coverless_hide_result_count(result: *const CoverlessHideResult) -> usize {
    result.as_ref().map_or(0, |r| r.image_ids.len())
}

/// Image id at transmission position `i`, owned by the result; NULL if out of range.
///
/// # Safety
/// `result` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn coverless_hide_result_image_id(result: *const CoverlessHideResult, i: usize) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.image_ids.get(i))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// # Safety
/// `result` must be live; `start` and `length` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_hide_result_position_key(
    result: *const CoverlessHideResult,
    i: usize,
    start: *mut u32,
    length: *mut u32,
) -> CoverlessStatus {
    guard(|| {
        let pk = handle(result)?
            .result
            .position_keys
            .get(i)
            .ok_or(Failure::Argument("position key index out of range"))?;
        if start.is_null() || length.is_null() {
            return Err(Failure::Argument("null output pointer"));
        }
        *start = pk.start;
        *length = pk.length;
        Ok(())
    })
}

/// Stego manifest JSON in transmission order.
///
/// # Safety
/// `result` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_hide_result_manifest_json(
    result: *const CoverlessHideResult,
    out: *mut CoverlessBuffer,
) -> CoverlessStatus {
    guard(|| put_buffer(out, handle(result)?.result.manifest().to_json().into_bytes()))
}

/// Seals the result's position keys with a 32-byte pre-shared secret.
///
/// # Safety
/// `result` must be live; `secret` must point to 32 bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_hide_result_seal_keys(
    result: *const CoverlessHideResult,
    secret: *const u8,
    out: *mut CoverlessBuffer,
) -> CoverlessStatus {
    guard(|| {
        let sealed = seal_keys(&handle(result)?.result.position_keys, &psk(secret)?, &mut rand::rngs::OsRng);
        put_buffer(out, sealed)
    })
}

/// # Safety
/// `result` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn coverless_hide_result_free(result: *mut CoverlessHideResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Seals `count` position keys from parallel arrays.
///
/// # Safety
/// `starts` and `lengths` must each hold `count` values; `secret` must point to 32 bytes.
#[no_mangle]
pub unsafe extern "C" fn coverless_seal_keys(
    starts: *const u32,
    lengths: *const u32,
    count: usize,
    secret: *const u8,
    out: *mut CoverlessBuffer,
) -> CoverlessStatus {
    guard(|| {
        let keys = position_keys(starts, lengths, count)?;
        put_buffer(out, seal_keys(&keys, &psk(secret)?, &mut rand::rngs::OsRng))
    })
}

/// Opens a sealed keyfile into a buffer of little-endian `(start, length)` u32 pairs.
/// Nothing is written on authentication failure.
///
/// # Safety
/// `file` must point to `file_len` bytes; `secret` must point to 32 bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_open_keys(
    file: *const u8,
    file_len: usize,
    secret: *const u8,
    out: *mut CoverlessBuffer,
) -> CoverlessStatus {
    guard(|| {
        let keys = open_keys(bytes(file, file_len)?, &psk(secret)?)?;
        let mut flat = Vec::with_capacity(keys.len() * 8);
        for k in keys {
            flat.extend_from_slice(&k.start.to_le_bytes());
            flat.extend_from_slice(&k.length.to_le_bytes());
        }
        put_buffer(out, flat)
    })
}

/// Recovers message bytes from stego detections (nulls for lost images) and
/// opened position keys. Lost segments are zero padded; `padded_bits` may be NULL.
///
/// # Safety
/// `json` must point to `json_len` bytes; `starts`/`lengths` must hold `count`
/// values; handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn coverless_extract(
    json: *const u8,
    json_len: usize,
    starts: *const u32,
    lengths: *const u32,
    count: usize,
    dict: *const CoverlessDictionary,
    key: *const CoverlessKey,
    min_area: f64,
    min_conf: f64,
    out: *mut CoverlessBuffer,
    padded_bits: *mut usize,
) -> CoverlessStatus {
    guard(|| {
        let records = parse_stego_detection_file(bytes(json, json_len)?)?;
        let keys = position_keys(starts, lengths, count)?;
        let report = extract(&records, &keys, &handle(dict)?.0, &handle(key)?.0, &thresholds(min_area, min_conf)?)?;
        let recovered = report.to_bytes()?;
        if !padded_bits.is_null() {
            *padded_bits = report.padded_bits;
        }
        put_buffer(out, recovered)
    })
}
